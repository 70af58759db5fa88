#include "roml/taskdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace roml {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRateMin = 1e-8;
constexpr double kRateMax = 1e8;

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double beta_unit_log_pdf(double phi, double u) {
    if (u < 0.0 || u > 1.0) return -kInf;
    const double a = 2.0 * phi;
    const double b = 2.0 - 2.0 * phi;
    double lp = -log_beta_fn(a, b);
    if (a != 1.0) lp += (a - 1.0) * std::log(u);
    if (b != 1.0) lp += (b - 1.0) * std::log1p(-u);
    return lp;
}

double golden_section_max(const auto& f, double lo, double hi, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double mid = 0.5 * (a + b);
    // The maximum may sit on the clamp boundary.
    double best = mid, fbest = f(mid);
    for (double x : {lo, hi}) {
        const double fx = f(x);
        if (fx > fbest) {
            best = x;
            fbest = fx;
        }
    }
    return best;
}

}  // namespace

TaskDistribution TaskDistribution::exponential(double rate) {
    TaskDistribution d;
    d.family_ = Family::Exponential;
    d.param_ = rate;
    d.validate();
    return d;
}

TaskDistribution TaskDistribution::beta_unit(double phi) {
    TaskDistribution d;
    d.family_ = Family::BetaUnit;
    d.param_ = phi;
    d.validate();
    return d;
}

TaskDistribution TaskDistribution::affine_beta_unit(double phi, double lo, double hi) {
    TaskDistribution d;
    d.family_ = Family::AffineBetaUnit;
    d.param_ = phi;
    d.lo_ = lo;
    d.hi_ = hi;
    d.validate();
    return d;
}

TaskDistribution TaskDistribution::product(std::vector<TaskDistribution> components) {
    TaskDistribution d;
    d.family_ = Family::Product;
    d.components_ = std::move(components);
    d.validate();
    return d;
}

std::string TaskDistribution::family_name() const {
    switch (family_) {
        case Family::Exponential: return "exponential";
        case Family::BetaUnit: return "beta_unit";
        case Family::AffineBetaUnit: return "affine_beta_unit";
        case Family::Product: return "product";
    }
    return "unknown";
}

std::size_t TaskDistribution::dim() const {
    if (family_ != Family::Product) return 1;
    std::size_t n = 0;
    for (const auto& c : components_) n += c.dim();
    return n;
}

std::vector<double> TaskDistribution::params() const {
    if (family_ != Family::Product) return {param_};
    std::vector<double> out;
    for (const auto& c : components_) {
        auto p = c.params();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

TaskDistribution TaskDistribution::with_params(std::span<const double> params) const {
    TaskDistribution d = *this;
    if (family_ != Family::Product) {
        if (params.size() != 1) throw ParameterError("expected 1 parameter for " + family_name());
        d.param_ = params[0];
    } else {
        std::size_t offset = 0;
        for (auto& c : d.components_) {
            const std::size_t k = c.params().size();
            if (offset + k > params.size()) throw ParameterError("too few parameters for product distribution");
            c = c.with_params(params.subspan(offset, k));
            offset += k;
        }
        if (offset != params.size()) throw ParameterError("too many parameters for product distribution");
    }
    d.validate();
    return d;
}

void TaskDistribution::validate() const {
    switch (family_) {
        case Family::Exponential:
            if (!(param_ > 0.0) || !std::isfinite(param_))
                throw ParameterError("exponential rate must be positive and finite");
            break;
        case Family::BetaUnit:
        case Family::AffineBetaUnit:
            if (!(param_ >= kBetaPhiMin && param_ <= kBetaPhiMax))
                throw ParameterError("beta phi must lie in [1e-3, 1 - 1e-3]");
            if (family_ == Family::AffineBetaUnit && !(hi_ > lo_))
                throw ParameterError("affine beta requires hi > lo");
            break;
        case Family::Product:
            if (components_.empty()) throw ParameterError("product distribution needs components");
            for (const auto& c : components_) c.validate();
            break;
    }
}

double TaskDistribution::sample_scalar(RandomStream& rng) const {
    switch (family_) {
        case Family::Exponential: return rng.exponential(param_);
        case Family::BetaUnit:
        case Family::AffineBetaUnit: {
            double u = rng.beta(2.0 * param_, 2.0 - 2.0 * param_);
            if (!std::isfinite(u)) u = 0.5;
            // Keep the draw strictly inside (0, 1) so the density stays finite.
            u = std::clamp(u, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
            return family_ == Family::BetaUnit ? u : lo_ + (hi_ - lo_) * u;
        }
        case Family::Product: break;
    }
    throw ParameterError("sample_scalar on product distribution");
}

Task TaskDistribution::sample_one(RandomStream& rng) const {
    if (family_ != Family::Product) return {sample_scalar(rng)};
    Task z;
    z.reserve(dim());
    for (const auto& c : components_) {
        Task part = c.sample_one(rng);
        z.insert(z.end(), part.begin(), part.end());
    }
    return z;
}

std::vector<Task> TaskDistribution::sample(RandomStream& rng, std::size_t n) const {
    if (n == 0) throw ParameterError("sample count must be >= 1");
    std::vector<Task> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_one(rng));
    return out;
}

double TaskDistribution::log_density_scalar(double z) const {
    switch (family_) {
        case Family::Exponential:
            if (z < 0.0) return -kInf;
            return std::log(param_) - param_ * z;
        case Family::BetaUnit: return beta_unit_log_pdf(param_, z);
        case Family::AffineBetaUnit: {
            const double width = hi_ - lo_;
            return beta_unit_log_pdf(param_, (z - lo_) / width) - std::log(width);
        }
        case Family::Product: break;
    }
    return -kInf;
}

double TaskDistribution::log_density(const Task& z) const {
    if (z.size() != dim()) throw ParameterError("task dimension does not match distribution");
    if (family_ != Family::Product) return log_density_scalar(z[0]);
    double total = 0.0;
    std::size_t offset = 0;
    for (const auto& c : components_) {
        const std::size_t k = c.dim();
        total += c.log_density(Task(z.begin() + static_cast<std::ptrdiff_t>(offset),
                                    z.begin() + static_cast<std::ptrdiff_t>(offset + k)));
        offset += k;
    }
    return total;
}

double TaskDistribution::density(const Task& z) const { return std::exp(log_density(z)); }

std::vector<double> TaskDistribution::mean() const {
    switch (family_) {
        case Family::Exponential: return {1.0 / param_};
        case Family::BetaUnit: return {param_};
        case Family::AffineBetaUnit: return {lo_ + param_ * (hi_ - lo_)};
        case Family::Product: break;
    }
    std::vector<double> out;
    for (const auto& c : components_) {
        auto m = c.mean();
        out.insert(out.end(), m.begin(), m.end());
    }
    return out;
}

std::vector<std::pair<double, double>> TaskDistribution::support() const {
    switch (family_) {
        case Family::Exponential: return {{0.0, kInf}};
        case Family::BetaUnit: return {{0.0, 1.0}};
        case Family::AffineBetaUnit: return {{lo_, hi_}};
        case Family::Product: break;
    }
    std::vector<std::pair<double, double>> out;
    for (const auto& c : components_) {
        auto s = c.support();
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

bool TaskDistribution::same_family(const TaskDistribution& other) const {
    if (family_ != other.family_) return false;
    if (family_ == Family::AffineBetaUnit) return lo_ == other.lo_ && hi_ == other.hi_;
    if (family_ != Family::Product) return true;
    if (components_.size() != other.components_.size()) return false;
    for (std::size_t i = 0; i < components_.size(); ++i)
        if (!components_[i].same_family(other.components_[i])) return false;
    return true;
}

nlohmann::json TaskDistribution::to_json() const {
    nlohmann::json j;
    j["family"] = family_name();
    switch (family_) {
        case Family::Exponential:
        case Family::BetaUnit: j["params"] = {param_}; break;
        case Family::AffineBetaUnit:
            j["params"] = {param_};
            j["lo"] = lo_;
            j["hi"] = hi_;
            break;
        case Family::Product: {
            j["params"] = params();
            nlohmann::json comps = nlohmann::json::array();
            for (const auto& c : components_) comps.push_back(c.to_json());
            j["components"] = comps;
            break;
        }
    }
    return j;
}

TaskDistribution TaskDistribution::from_json(const nlohmann::json& j) {
    const std::string family = j.at("family").get<std::string>();
    if (family == "product") {
        std::vector<TaskDistribution> comps;
        for (const auto& c : j.at("components")) comps.push_back(from_json(c));
        return product(std::move(comps));
    }
    const double p = j.at("params").at(0).get<double>();
    if (family == "exponential") return exponential(p);
    if (family == "beta_unit") return beta_unit(p);
    if (family == "affine_beta_unit") return affine_beta_unit(p, j.at("lo").get<double>(), j.at("hi").get<double>());
    throw ParameterError("unknown distribution family '" + family + "'");
}

double importance_weight(const TaskDistribution& original, const TaskDistribution& current, const Task& z) {
    if (original == current) {
        if (current.density(z) <= 0.0) throw DegenerateWeightError("task outside the sampler's support");
        return 1.0;
    }
    const double lc = current.log_density(z);
    if (!std::isfinite(lc) || std::exp(lc) <= 0.0)
        throw DegenerateWeightError("task has zero density under the current sampler");
    return std::exp(original.log_density(z) - lc);
}

double beta_unit_log_likelihood(double phi, std::span<const double> unit_samples, std::span<const double> weights) {
    double total = 0.0;
    for (std::size_t i = 0; i < unit_samples.size(); ++i) {
        if (weights[i] == 0.0) continue;
        total += weights[i] * beta_unit_log_pdf(phi, unit_samples[i]);
    }
    return total;
}

namespace {

std::optional<TaskDistribution> ce_update_scalar(const TaskDistribution& family, std::span<const double> values,
                                                 std::span<const double> weights) {
    switch (family.family()) {
        case TaskDistribution::Family::Exponential: {
            double sw = 0.0, swz = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                sw += weights[i];
                swz += weights[i] * values[i];
            }
            const double rate = swz > 0.0 ? sw / swz : kRateMax;
            return TaskDistribution::exponential(std::clamp(rate, kRateMin, kRateMax));
        }
        case TaskDistribution::Family::BetaUnit:
        case TaskDistribution::Family::AffineBetaUnit: {
            std::vector<double> unit(values.begin(), values.end());
            if (family.family() == TaskDistribution::Family::AffineBetaUnit) {
                const double width = family.hi() - family.lo();
                for (double& u : unit) u = (u - family.lo()) / width;
            }
            for (double& u : unit)
                u = std::clamp(u, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
            const auto objective = [&](double phi) { return beta_unit_log_likelihood(phi, unit, weights); };
            const double phi = golden_section_max(objective, kBetaPhiMin, kBetaPhiMax, 1e-8);
            const double p[1] = {phi};
            return family.with_params(p);
        }
        case TaskDistribution::Family::Product: break;
    }
    return std::nullopt;
}

}  // namespace

std::optional<TaskDistribution> ce_update(const TaskDistribution& family, std::span<const Task> tasks,
                                          std::span<const double> weights) {
    if (tasks.size() != weights.size()) throw ParameterError("ce_update: tasks and weights differ in length");
    if (tasks.empty()) return std::nullopt;
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("ce_update: weights must be finite and >= 0");
        total += w;
    }
    if (!(total > 0.0)) return std::nullopt;
    std::vector<double> normalized(weights.begin(), weights.end());
    for (double& w : normalized) w /= total;

    if (family.family() != TaskDistribution::Family::Product) {
        std::vector<double> values;
        values.reserve(tasks.size());
        for (const auto& z : tasks) values.push_back(z.at(0));
        return ce_update_scalar(family, values, normalized);
    }

    std::vector<TaskDistribution> comps;
    std::size_t offset = 0;
    for (const auto& c : family.components()) {
        const std::size_t k = c.dim();
        std::vector<Task> slice;
        slice.reserve(tasks.size());
        for (const auto& z : tasks)
            slice.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(offset),
                               z.begin() + static_cast<std::ptrdiff_t>(offset + k));
        auto updated = ce_update(c, slice, normalized);
        if (!updated) return std::nullopt;
        comps.push_back(std::move(*updated));
        offset += k;
    }
    return TaskDistribution::product(std::move(comps));
}

}  // namespace roml
