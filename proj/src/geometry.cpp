// SPDX-License-Identifier: Apache-2.0
//
// hwiloc: mmWave OFDM MIMO localization under hardware impairments
// Copyright (C) 2026 The hwiloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "hwiloc/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace hwiloc {

double wrap_angle(double angle) {
    double wrapped = std::remainder(angle, 2.0 * kPi);
    if (wrapped <= -kPi) wrapped += 2.0 * kPi;
    return wrapped;
}

ArrayLayout ArrayLayout::upa(int n_z, int n_y, double spacing) {
    if (n_z < 1 || n_y < 1) throw std::invalid_argument("ArrayLayout: n_z and n_y must be >= 1");
    if (!(spacing > 0.0)) throw std::invalid_argument("ArrayLayout: spacing must be positive");
    ArrayLayout layout;
    layout.n_z = n_z;
    layout.n_y = n_y;
    layout.spacing = spacing;
    layout.positions = Mat3X::Zero(3, n_z * n_y);
    const double y0 = 0.5 * (n_y - 1);
    const double z0 = 0.5 * (n_z - 1);
    for (int iy = 0; iy < n_y; ++iy)
        for (int iz = 0; iz < n_z; ++iz) {
            const int n = iy * n_z + iz;
            layout.positions(1, n) = (iy - y0) * spacing;
            layout.positions(2, n) = (iz - z0) * spacing;
        }
    return layout;
}

VecX ArrayLayout::y_coordinates() const {
    VecX y(n_y);
    for (int iy = 0; iy < n_y; ++iy) y(iy) = positions(1, iy * n_z);
    return y;
}

VecX ArrayLayout::z_coordinates() const {
    VecX z(n_z);
    for (int iz = 0; iz < n_z; ++iz) z(iz) = positions(2, iz);
    return z;
}

void ArrayLayout::validate() const {
    if (positions.cols() != size()) throw DimensionError("ArrayLayout: positions must have n_z*n_y columns");
    if (positions.row(0).cwiseAbs().maxCoeff() != 0.0)
        throw std::invalid_argument("ArrayLayout: elements must lie in the local YZ plane");
    for (int a = 0; a < size(); ++a)
        for (int b = a + 1; b < size(); ++b)
            if ((positions.col(a) - positions.col(b)).norm() == 0.0)
                throw std::invalid_argument("ArrayLayout: duplicate element positions");
}

VecX ChannelParams::to_vector() const {
    VecX v(kDim);
    v << phi_b, theta_b, phi_u, theta_u, tau, rho, xi;
    return v;
}

VecX ChannelParams::geometric() const { return to_vector().head(kGeometricDim); }

ChannelParams ChannelParams::from_vector(const VecX& v) {
    if (v.size() != kDim) throw DimensionError("ChannelParams: expected 7 entries");
    return {v(0), v(1), v(2), v(3), v(4), v(5), v(6)};
}

ChannelParams ChannelParams::from_geometric(const VecX& c, double rho, double xi) {
    if (c.size() != kGeometricDim) throw DimensionError("ChannelParams: expected 5 geometric entries");
    return {c(0), c(1), c(2), c(3), c(4), rho, xi};
}

VecX StateVector::to_vector() const {
    VecX s(13);
    s.head<3>() = position;
    s(3) = clock_offset;
    s.tail<9>() = Eigen::Map<const Eigen::Matrix<double, 9, 1>>(rotation.data());
    return s;
}

StateVector StateVector::from_vector(const VecX& s) {
    if (s.size() != 13) throw DimensionError("StateVector: expected 13 entries");
    StateVector out;
    out.position = s.head<3>();
    out.clock_offset = s(3);
    out.rotation = Eigen::Map<const Mat3>(s.tail<9>().data());
    return out;
}

Mat3 rotation_from_euler(const Vec3& angles_deg) {
    const Eigen::AngleAxisd yaw(deg2rad(angles_deg(0)), Vec3::UnitZ());
    const Eigen::AngleAxisd pitch(deg2rad(angles_deg(1)), Vec3::UnitY());
    const Eigen::AngleAxisd roll(deg2rad(angles_deg(2)), Vec3::UnitX());
    return (yaw * pitch * roll).toRotationMatrix();
}

Vec3 direction_vector(double azimuth, double elevation) {
    return {std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
            std::sin(elevation)};
}

Vec3 direction_d_azimuth(double azimuth, double elevation) {
    return {-std::cos(elevation) * std::sin(azimuth), std::cos(elevation) * std::cos(azimuth), 0.0};
}

Vec3 direction_d_elevation(double azimuth, double elevation) {
    return {-std::sin(elevation) * std::cos(azimuth), -std::sin(elevation) * std::sin(azimuth),
            std::cos(elevation)};
}

AzEl azel_from_direction(const Vec3& t) {
    const Vec3 u = t.normalized();
    return {wrap_angle(std::atan2(u(1), u(0))), std::asin(std::clamp(u(2), -1.0, 1.0))};
}

ChannelParams channel_params_from_state(const StateVector& s, const Pose& bs, double wavelength, double xi) {
    const Vec3 diff = s.position - bs.position;
    const double distance = diff.norm();
    if (!(distance > 0.0)) throw GeometryError("channel_params_from_state: UE and BS positions coincide");
    const Vec3 global = diff / distance;
    const AzEl aoa = azel_from_direction(bs.rotation.transpose() * global);
    const AzEl aod = azel_from_direction(s.rotation.transpose() * (-global));
    ChannelParams eta;
    eta.phi_b = aoa.azimuth;
    eta.theta_b = aoa.elevation;
    eta.phi_u = aod.azimuth;
    eta.theta_u = aod.elevation;
    eta.tau = distance / kSpeedOfLight + s.clock_offset;
    eta.rho = wavelength / (4.0 * kPi * kSpeedOfLight * eta.tau);
    eta.xi = xi;
    return eta;
}

CVec steering_vector(const ArrayLayout& layout, double azimuth, double elevation, double carrier_hz) {
    const double k = 2.0 * kPi * carrier_hz / kSpeedOfLight;
    const VecX phase = k * (layout.positions.transpose() * direction_vector(azimuth, elevation));
    CVec a(phase.size());
    for (Eigen::Index n = 0; n < phase.size(); ++n) a(n) = std::polar(1.0, phase(n));
    return a;
}

CVec perturbed_steering_vector(const ArrayLayout& layout, const Mat3X& displacement, const CVec& gains,
                               double azimuth, double elevation, double carrier_hz) {
    if (displacement.cols() != layout.size() || gains.size() != layout.size())
        throw DimensionError("perturbed_steering_vector: perturbation size does not match the array");
    const double k = 2.0 * kPi * carrier_hz / kSpeedOfLight;
    const Mat3X z = layout.positions + displacement;
    const VecX phase = k * (z.transpose() * direction_vector(azimuth, elevation));
    CVec a(phase.size());
    for (Eigen::Index n = 0; n < phase.size(); ++n) a(n) = gains(n) * std::polar(1.0, phase(n));
    return a;
}

SteeringDerivatives steering_vector_with_derivatives(const ArrayLayout& layout, double azimuth,
                                                     double elevation, double carrier_hz) {
    const double k = 2.0 * kPi * carrier_hz / kSpeedOfLight;
    SteeringDerivatives out;
    out.value = steering_vector(layout, azimuth, elevation, carrier_hz);
    const VecX d_az = k * (layout.positions.transpose() * direction_d_azimuth(azimuth, elevation));
    const VecX d_el = k * (layout.positions.transpose() * direction_d_elevation(azimuth, elevation));
    out.d_azimuth = kJ * out.value.cwiseProduct(d_az.cast<cdouble>());
    out.d_elevation = kJ * out.value.cwiseProduct(d_el.cast<cdouble>());
    return out;
}

CVec axis_steering(const VecX& coordinates, double omega, double wavelength) {
    CVec a(coordinates.size());
    for (Eigen::Index n = 0; n < coordinates.size(); ++n)
        a(n) = std::polar(1.0, 2.0 / wavelength * omega * coordinates(n));
    return a;
}

SpatialFrequencies spatial_frequencies(const ChannelParams& eta, double subcarrier_spacing) {
    SpatialFrequencies w;
    w.omega[0] = kPi * std::sin(eta.phi_b) * std::cos(eta.theta_b);
    w.omega[1] = kPi * std::sin(eta.theta_b);
    w.omega[2] = kPi * std::sin(eta.phi_u) * std::cos(eta.theta_u);
    w.omega[3] = kPi * std::sin(eta.theta_u);
    w.omega[4] = 2.0 * kPi * subcarrier_spacing * eta.tau;
    return w;
}

const std::array<Mat3, 3>& so3_generators() {
    static const std::array<Mat3, 3> generators = [] {
        std::array<Mat3, 3> k;
        // columns of tangent_basis(R) are vec(R K_i) / sqrt(2)
        k[0] << 0, 0, 1, 0, 0, 0, -1, 0, 0;
        k[1] << 0, 0, 0, 0, 0, 1, 0, -1, 0;
        k[2] << 0, -1, 0, 1, 0, 0, 0, 0, 0;
        return k;
    }();
    return generators;
}

Eigen::Matrix<double, 9, 3> tangent_basis(const Mat3& rotation) {
    Eigen::Matrix<double, 9, 3> basis = Eigen::Matrix<double, 9, 3>::Zero();
    const Vec3 r1 = rotation.col(0), r2 = rotation.col(1), r3 = rotation.col(2);
    basis.block<3, 1>(0, 0) = -r3;
    basis.block<3, 1>(6, 0) = r1;
    basis.block<3, 1>(3, 1) = -r3;
    basis.block<3, 1>(6, 1) = r2;
    basis.block<3, 1>(0, 2) = r2;
    basis.block<3, 1>(3, 2) = -r1;
    return basis / std::sqrt(2.0);
}

Mat3 project_to_so3(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0.0) {
        Mat3 fix = Mat3::Identity();
        fix(2, 2) = -1.0;
        r = svd.matrixU() * fix * svd.matrixV().transpose();
    }
    return r;
}

Mat3 retract_rotation(const Mat3& rotation, const Vec3& tangent) {
    const auto& k = so3_generators();
    const Mat3 skew = (tangent(0) * k[0] + tangent(1) * k[1] + tangent(2) * k[2]) / std::sqrt(2.0);
    const Vec3 w(skew(2, 1), skew(0, 2), skew(1, 0));
    const double angle = w.norm();
    Mat3 step = Mat3::Identity();
    if (angle > 0.0) step = Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
    return project_to_so3(rotation * step);
}

bool is_rotation(const Mat3& r, double tol) {
    return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace hwiloc
