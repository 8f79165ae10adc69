#pragma once

#include <array>
#include <functional>
#include <vector>

#include "topoderiv/fem.hpp"

namespace topoderiv {

/// Deterministic quasi-uniform unit directions for far-field sampling:
/// equally spaced angles in 2D, a spherical Fibonacci set in 3D.
std::vector<Eigen::Vector3d> farfield_directions(int dim, int count);

/// Geometric radius grid with `count` points spanning [lo, hi].
std::vector<double> sampling_radii(double lo, double hi, int count);

/// Point samples of a vector field on concentric circles (2D) or spheres
/// (3D) centered at the origin; values[l] has one column per direction.
struct FarFieldSamples {
    int dim = 0;
    std::vector<double> radii;
    std::vector<Eigen::Vector3d> directions;
    std::vector<Eigen::MatrixXd> values;

    /// Root-mean-square sample magnitude; the scale for relative residuals.
    double amplitude() const;
    /// Root-mean-square magnitude at one radius.
    double radius_amplitude(int l) const;
};

FarFieldSamples sample_farfield(const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& field,
                                int dim, const std::vector<double>& radii,
                                int directions_per_radius);

FarFieldSamples sample_farfield(const FemField& field, const CellLocator& locator,
                                const std::vector<double>& radii, int directions_per_radius);

/// Closed-form leading behaviour of an exterior field around the origin,
///     V_i(x) = r^p * sum_j power_coef(i, j) m_j(x / r) + log_coef(i) ln r,
/// where m_j runs over the monomials of degree <= angular_degree in the unit
/// direction. Values and gradients are analytic, so the model can supply
/// trace and traction data far below the radii it was fitted on (the power
/// part is homogeneous of degree p by construction).
struct FarFieldModel {
    int dim = 0;
    double exponent = 0.0;
    int angular_degree = 0;
    std::vector<std::array<int, 3>> monomials;
    Eigen::MatrixXd power_coef;  // dim x monomials
    Eigen::VectorXd log_coef;    // dim entries; zero when no log term was fitted

    Eigen::Vector3d value(const Eigen::Vector3d& x) const;
    /// gradient(i, j) = d V_i / d x_j, padded with zeros beyond dim
    Eigen::Matrix3d gradient(const Eigen::Vector3d& x) const;
    /// Symmetrized gradient at x.
    Eigen::Matrix3d strain(const Eigen::Vector3d& x) const;
    bool zero(double tol = 0.0) const;
};

/// Result of fitting a radial leading-order model to samples.
///
/// `exponent` is the unconstrained fit: the minimizer over p of the residual
/// of r^p * (angular polynomial) + constant. A field that grows like ln r
/// drives this exponent to 0, since (r^p - 1)/p approaches ln r, so the same
/// scan classifies decaying and logarithmic kinds. `model` is refitted with
/// the exponent snapped to the predicted value (plus a ln r column when the
/// kind calls for one); `residual` is its relative root-mean-square misfit.
struct FarFieldFit {
    FarFieldModel model;
    double predicted_exponent = 0.0;
    bool with_log = false;
    double exponent = 0.0;              // free least-squares exponent
    double free_residual = 0.0;         // relative misfit at the free exponent
    double residual = 0.0;              // relative misfit of the snapped model
    double log_coefficient = 0.0;       // Euclidean norm of model.log_coef
    Eigen::Vector3d constant_shift = Eigen::Vector3d::Zero();  // additive gauge nuisance
    double amplitude = 0.0;
};

/// Fits the far-field model above by linear least squares per trial exponent
/// and a deterministic scan plus golden-section refinement over the exponent.
/// Radius blocks are weighted by their inverse amplitude so every sampling
/// circle contributes equally. angular_degree < 0 picks the default (4 in 2D,
/// 2 in 3D).
FarFieldFit fit_farfield(const FarFieldSamples& samples, double predicted_exponent,
                         bool with_log, int angular_degree = -1);

/// Samples a discrete exterior field on circles in [r_lo, r_hi] and fits it.
FarFieldFit fit_farfield(const FemField& field, const CellLocator& locator, double r_lo,
                         double r_hi, double predicted_exponent, bool with_log,
                         int angular_degree = -1);

/// Coefficient-wise sum of two models sharing dimension, exponent, and
/// angular basis. The second-order trace data combine the strain-driven and
/// volume-driven far fields into one model this way.
FarFieldModel add_models(const FarFieldModel& a, const FarFieldModel& b);

}  // namespace topoderiv
