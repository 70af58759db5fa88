#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "roml/random.hpp"

namespace roml {

/// A task is a point of the task space, e.g. a rain intensity or (A, b, omega).
using Task = std::vector<double>;

/// Raised when a distribution or statistic is handed parameters outside its domain.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an importance weight would divide by a zero density.
class DegenerateWeightError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Clamp range for BetaUnit parameters.
inline constexpr double kBetaPhiMin = 1e-3;
inline constexpr double kBetaPhiMax = 1.0 - 1e-3;

/// Parametric task distribution D_phi.
///
/// Families:
///  - Exponential(rate): density rate * exp(-rate z) on z >= 0.
///  - BetaUnit(phi): Beta(2 phi, 2 - 2 phi) on [0, 1]; mean phi, BetaUnit(0.5) is uniform.
///  - AffineBetaUnit(phi, lo, hi): lo + (hi - lo) * BetaUnit(phi); only phi is learnable.
///  - Product(components): independent components, task vector is the concatenation.
class TaskDistribution {
public:
    enum class Family { Exponential, BetaUnit, AffineBetaUnit, Product };

    static TaskDistribution exponential(double rate);
    static TaskDistribution beta_unit(double phi);
    static TaskDistribution affine_beta_unit(double phi, double lo, double hi);
    static TaskDistribution product(std::vector<TaskDistribution> components);

    Family family() const { return family_; }
    std::string family_name() const;

    /// Dimension of a task drawn from this distribution.
    std::size_t dim() const;

    /// Learnable parameters, flattened (product: concatenation of components).
    std::vector<double> params() const;
    /// Same family and fixed constants, new learnable parameters.
    TaskDistribution with_params(std::span<const double> params) const;

    const std::vector<TaskDistribution>& components() const { return components_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

    /// Throws ParameterError when the parameters are outside the family's domain.
    void validate() const;

    Task sample_one(RandomStream& rng) const;
    std::vector<Task> sample(RandomStream& rng, std::size_t n) const;

    /// Density at z; 0 outside the support.
    double density(const Task& z) const;
    double log_density(const Task& z) const;

    /// Analytic mean of each task coordinate.
    std::vector<double> mean() const;

    /// Support bounds per coordinate (upper bound may be +inf).
    std::vector<std::pair<double, double>> support() const;

    bool same_family(const TaskDistribution& other) const;

    nlohmann::json to_json() const;
    static TaskDistribution from_json(const nlohmann::json& j);

    friend bool operator==(const TaskDistribution&, const TaskDistribution&) = default;

private:
    TaskDistribution() = default;

    double sample_scalar(RandomStream& rng) const;
    double log_density_scalar(double z) const;

    Family family_ = Family::Exponential;
    double param_ = 1.0;  // rate or phi
    double lo_ = 0.0;
    double hi_ = 1.0;
    std::vector<TaskDistribution> components_;
};

/// D_original(z) / D_current(z). Throws DegenerateWeightError if D_current(z) == 0.
double importance_weight(const TaskDistribution& original, const TaskDistribution& current, const Task& z);

/// Weighted maximum-likelihood refit within the family of `family`.
///
/// Returns std::nullopt (no update) when the selection is empty or carries no
/// positive weight. Weights are normalized internally. Exponential uses the
/// closed form, BetaUnit/AffineBetaUnit a golden-section search on
/// [kBetaPhiMin, kBetaPhiMax], Product refits each component independently.
std::optional<TaskDistribution> ce_update(const TaskDistribution& family,
                                          std::span<const Task> tasks,
                                          std::span<const double> weights);

/// Weighted log-likelihood of a BetaUnit(phi) model on unit-interval samples.
double beta_unit_log_likelihood(double phi, std::span<const double> unit_samples,
                                std::span<const double> weights);

}  // namespace roml
