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

#pragma once

#include "hwiloc/types.hpp"

#include <array>
#include <vector>

namespace hwiloc {

struct Pose {
    Vec3 position = Vec3::Zero();
    Mat3 rotation = Mat3::Identity();
};

/// Uniform planar array in the local YZ plane. Element n = iy * n_z + iz, so
/// the z index runs fastest and a steering vector factors as a_y (x) a_z.
struct ArrayLayout {
    int n_z = 1;
    int n_y = 1;
    double spacing = 0.0;
    Mat3X positions;

    static ArrayLayout upa(int n_z, int n_y, double spacing);

    int size() const { return n_z * n_y; }
    /// Element coordinates along one axis (length n_y or n_z), centered.
    VecX y_coordinates() const;
    VecX z_coordinates() const;
    void validate() const;
};

/// Channel geometric parameters of the LOS path of one link, ordered as
/// (phi_B, theta_B, phi_U, theta_U, tau, rho, xi).
struct ChannelParams {
    double phi_b = 0.0;
    double theta_b = 0.0;
    double phi_u = 0.0;
    double theta_u = 0.0;
    double tau = 0.0;
    double rho = 1.0;
    double xi = 0.0;

    static constexpr int kDim = 7;
    static constexpr int kGeometricDim = 5;

    /// alpha = rho * exp(-j xi)
    cdouble gain() const { return std::polar(rho, -xi); }
    VecX to_vector() const;
    /// Non-nuisance sub-vector (phi_B, theta_B, phi_U, theta_U, tau).
    VecX geometric() const;
    static ChannelParams from_vector(const VecX& v);
    static ChannelParams from_geometric(const VecX& c, double rho = 1.0, double xi = 0.0);
};

struct StateVector {
    Vec3 position = Vec3::Zero();
    double clock_offset = 0.0;
    Mat3 rotation = Mat3::Identity();

    /// s = [p; B; vec(R)] (13 entries, column-major vec).
    VecX to_vector() const;
    static StateVector from_vector(const VecX& s);
};

/// Ground-truth world of one scenario.
struct ScenarioGeometry {
    std::vector<Pose> bs_poses;
    std::vector<ArrayLayout> bs_arrays;
    ArrayLayout ue_array;
    StateVector ue;
    double carrier_hz = 60e9;

    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    std::size_t n_links() const { return bs_poses.size(); }
};

/// Intrinsic Z-Y-X rotation, angles (yaw, pitch, roll) in degrees:
/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_from_euler(const Vec3& angles_deg);

/// t(phi, theta) = [cos(theta)cos(phi), cos(theta)sin(phi), sin(theta)].
Vec3 direction_vector(double azimuth, double elevation);
/// d t / d azimuth and d t / d elevation.
Vec3 direction_d_azimuth(double azimuth, double elevation);
Vec3 direction_d_elevation(double azimuth, double elevation);

struct AzEl {
    double azimuth = 0.0;
    double elevation = 0.0;
};
AzEl azel_from_direction(const Vec3& t);

/// LOS channel parameters of the link between the UE in state s and a BS.
/// rho follows free-space amplitude lambda / (4 pi c tau); xi is supplied.
ChannelParams channel_params_from_state(const StateVector& s, const Pose& bs, double wavelength,
                                        double xi = 0.0);

/// a_n = exp(j 2 pi f_c / c <z_n, t>).
CVec steering_vector(const ArrayLayout& layout, double azimuth, double elevation, double carrier_hz);

/// Steering vector with per-element gain error and displaced elements:
/// b .* exp(j 2 pi / lambda (Z + displacement)^T t).
CVec perturbed_steering_vector(const ArrayLayout& layout, const Mat3X& displacement, const CVec& gains,
                               double azimuth, double elevation, double carrier_hz);

struct SteeringDerivatives {
    CVec value;
    CVec d_azimuth;
    CVec d_elevation;
};
SteeringDerivatives steering_vector_with_derivatives(const ArrayLayout& layout, double azimuth,
                                                     double elevation, double carrier_hz);

/// One-axis steering vector exp(j (2 / lambda) omega z) for spatial frequency omega.
CVec axis_steering(const VecX& coordinates, double omega, double wavelength);

struct SpatialFrequencies {
    double omega[5] = {0, 0, 0, 0, 0};
};
/// omega1 = pi sin(phi_B) cos(theta_B), omega2 = pi sin(theta_B), omega3/omega4 at the UE,
/// omega5 = 2 pi df tau.
SpatialFrequencies spatial_frequencies(const ChannelParams& eta, double subcarrier_spacing);

// ---- SO(3) helpers -------------------------------------------------------

/// Skew generators K_i with vec(R K_i) / sqrt(2) equal to the columns of the
/// tangent basis built from the columns r1, r2, r3 of R.
const std::array<Mat3, 3>& so3_generators();
/// 9x3 orthonormal tangent basis of SO(3) at R (columns act on vec(R)).
Eigen::Matrix<double, 9, 3> tangent_basis(const Mat3& rotation);
/// Retraction R * exp(sum_i u_i K_i / sqrt(2)) followed by SVD re-projection.
Mat3 retract_rotation(const Mat3& rotation, const Vec3& tangent);
/// Nearest rotation (SVD polar factor with det fix-up).
Mat3 project_to_so3(const Mat3& m);
bool is_rotation(const Mat3& r, double tol);

}  // namespace hwiloc
