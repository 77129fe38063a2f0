#include "spr/resilience.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "spr/error.hpp"
#include "spr/normal.hpp"
#include "spr/parallel.hpp"

namespace spr {

double delta_hat(std::span<const double> mu1_values, std::span<const double> mu0_values) {
    if (mu1_values.empty() || mu0_values.empty()) throw EmptyGroup("treatment effect needs two nonempty arms");
    return sample_mean(mu1_values) - sample_mean(mu0_values);
}

double resilience_probability(std::span<const double> deltas) {
    if (deltas.empty()) throw EmptyGroup("empty delta distribution");
    const auto below = std::count_if(deltas.begin(), deltas.end(), [](double d) { return d < 0.0; });
    return static_cast<double>(below) / static_cast<double>(deltas.size());
}

double resilience_probability(const DeltaDistribution& dist) {
    return resilience_probability(dist.deltas);
}

std::size_t quantile_rank(std::size_t count, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    const double j = static_cast<double>(count);
    auto k = static_cast<std::size_t>(std::ceil(alpha * j));
    k = std::clamp<std::size_t>(k, 1, count);
    // Same double comparison as the ECDF definition k / J >= alpha.
    while (k > 1 && static_cast<double>(k - 1) / j >= alpha) --k;
    while (k < count && static_cast<double>(k) / j < alpha) ++k;
    return k;
}

double resilience_bound(std::span<const double> deltas, double alpha) {
    if (deltas.empty()) throw EmptyGroup("empty delta distribution");
    const std::size_t k = quantile_rank(deltas.size(), alpha);
    std::vector<double> work(deltas.begin(), deltas.end());
    std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k - 1), work.end());
    return work[k - 1];
}

double resilience_bound(const DeltaDistribution& dist, double alpha) {
    return resilience_bound(dist.deltas, alpha);
}

double closed_form_probability(const ClosedFormMoments& m) {
    if (m.sigma_b2 <= 0.0) return m.mu_b < 0.0 ? 1.0 : 0.0;
    return normal_cdf(-m.mu_b / std::sqrt(m.sigma_b2));
}

double closed_form_bound(const ClosedFormMoments& m, double alpha) {
    if (m.sigma_b2 <= 0.0) return m.mu_b;
    return m.mu_b + std::sqrt(m.sigma_b2) * normal_quantile(alpha);
}

std::size_t AnalysisContext::extrapolated_count() const {
    std::size_t n = 0;
    for (const auto& flags : extrapolated) n += static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
    return n;
}

AnalysisContext make_context(const SmoothedMean& mu_hat0, const SmoothedMean& mu_hat1, std::span<const double> s_b0,
                             std::span<const double> s_b1) {
    if (s_b0.empty() || s_b1.empty()) throw EmptyGroup("Study B arms must be nonempty");
    AnalysisContext ctx{{mu_hat0, mu_hat1}, {}, {}, {}};
    const std::array<std::span<const double>, 2> s_b{s_b0, s_b1};
    for (int g : kArms) {
        ctx.s_b[g].assign(s_b[g].begin(), s_b[g].end());
        for (const auto& v : ctx.fits[g].evaluate_flagged(s_b[g])) {
            ctx.mu_hat_b[g].push_back(v.value);
            ctx.extrapolated[g].push_back(v.extrapolated);
        }
    }
    return ctx;
}

AnalysisContext make_context(const StudyAData& study_a, const StudyBData& study_b, const SmootherConfig& smoother) {
    const auto fit0 = fit_arm(study_a.arms[0].surrogates, study_a.arms[0].outcomes, 0, smoother);
    const auto fit1 = fit_arm(study_a.arms[1].surrogates, study_a.arms[1].outcomes, 1, smoother);
    return make_context(fit0, fit1, study_b.surrogates[0], study_b.surrogates[1]);
}

std::array<ArmPerturbation, 2> make_perturbations(const AnalysisContext& context, const PerturbationClass& cls) {
    validate(cls);
    return {make_arm_perturbation(cls, 0, context.s_b[0], context.mu_hat_b[0]),
            make_arm_perturbation(cls, 1, context.s_b[1], context.mu_hat_b[1])};
}

std::vector<double> draw_deltas(const std::array<ArmPerturbation, 2>& arms, std::size_t draws, Seed seed,
                                std::size_t workers) {
    if (draws == 0) throw ConfigError("number of draws J must be >= 1");
    std::vector<double> deltas(draws);
    const std::size_t blocks = (draws + kDrawBlock - 1) / kDrawBlock;
    parallel_for(blocks, workers, [&](std::size_t b) {
        Stream stream(seed.child(b));
        const std::size_t end = std::min(draws, (b + 1) * kDrawBlock);
        for (std::size_t j = b * kDrawBlock; j < end; ++j) {
            const double a0 = arms[0].draw_average(stream);
            const double a1 = arms[1].draw_average(stream);
            deltas[j] = a1 - a0;
        }
    });
    return deltas;
}

Estimate estimate(const AnalysisContext& context, const PerturbationClass& cls, const EstimateOptions& options,
                  Seed seed) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    const auto arms = make_perturbations(context, cls);
    Estimate out;
    out.distribution.deltas = draw_deltas(arms, options.draws, seed, options.workers);
    out.distribution.class_used = cls;
    out.distribution.seed = seed;

    auto& r = out.report;
    r.alpha = options.alpha;
    r.p_hat = resilience_probability(out.distribution);
    r.q_alpha_hat = resilience_bound(out.distribution, options.alpha);
    r.closed_form = closed_form_moments(context.mu_hat_b[1], context.mu_hat_b[0], context.s_b[1], context.s_b[0], cls);
    r.p_closed = closed_form_probability(r.closed_form);
    r.q_closed = closed_form_bound(r.closed_form, options.alpha);
    return out;
}

Estimate estimate(const SmoothedMean& mu_hat0, const SmoothedMean& mu_hat1, std::span<const double> s_b0,
                  std::span<const double> s_b1, const PerturbationClass& cls, const EstimateOptions& options,
                  Seed seed) {
    return estimate(make_context(mu_hat0, mu_hat1, s_b0, s_b1), cls, options, seed);
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n, lo);
    for (std::size_t k = 1; k < n; ++k)
        out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    if (n > 1) out.back() = hi;
    return out;
}

} // namespace

std::array<ArmCurves, 2> sample_curves(const AnalysisContext& context, const PerturbationClass& cls, Seed seed,
                                       std::size_t count, std::size_t grid_size) {
    if (grid_size < 2) throw ConfigError("curve grid needs at least two points");
    const auto arms = make_perturbations(context, cls);
    std::array<ArmCurves, 2> curves;
    std::array<Eigen::MatrixXd, 2> grid_map;  // maps z to the deviation on the grid
    for (int g : kArms) {
        const auto [lo, hi] = std::minmax_element(context.s_b[g].begin(), context.s_b[g].end());
        curves[g].grid = linspace(*lo, *hi, grid_size);
        curves[g].fitted = context.fits[g].evaluate(curves[g].grid);
        if (arms[g].dimension() == 0) {
            grid_map[g] = Eigen::MatrixXd(grid_size, 0);
        } else if (const auto* gp = std::get_if<GaussianProcessClass>(&cls)) {
            const auto& p = gp->arms[g];
            const Eigen::MatrixXd cross = rbf_kernel(curves[g].grid, context.s_b[g], p.sigma2, p.theta);
            // K(grid, S) L^{-T}: solve L X' = cross'.
            const Eigen::MatrixXd lt_inv_cross =
                arms[g].factor().triangularView<Eigen::Lower>().solve(cross.transpose());
            grid_map[g] = lt_inv_cross.transpose();
        } else {
            const auto on_grid = make_arm_perturbation(cls, g, curves[g].grid, curves[g].fitted);
            grid_map[g] = on_grid.factor();
        }
    }
    const Eigen::Map<const Eigen::VectorXd> fitted0(curves[0].fitted.data(), grid_size);
    const Eigen::Map<const Eigen::VectorXd> fitted1(curves[1].fitted.data(), grid_size);
    std::array<Eigen::VectorXd, 2> z{Eigen::VectorXd(arms[0].dimension()), Eigen::VectorXd(arms[1].dimension())};
    for (std::size_t j = 0; j < count;) {
        Stream stream(seed.child(j / kDrawBlock));
        const std::size_t end = std::min(count, (j / kDrawBlock + 1) * kDrawBlock);
        for (; j < end; ++j) {
            for (int g : kArms)
                for (Eigen::Index i = 0; i < z[g].size(); ++i) z[g][i] = stream.normal();
            for (int g : kArms) {
                Eigen::VectorXd values = (g == 0 ? fitted0 : fitted1);
                if (z[g].size() > 0) values += grid_map[g] * z[g];
                curves[g].draws.emplace_back(values.data(), values.data() + values.size());
            }
        }
    }
    return curves;
}

// ---------------------------------------------------------------------------

std::vector<double> GridAxis::values() const {
    if (count == 0) throw ConfigError("grid axis needs at least one point");
    if (!(max >= min)) throw ConfigError("grid axis max must be >= min");
    if (count == 1) return {min};
    if (!log_spaced) return linspace(min, max, count);
    if (!(min > 0.0)) throw ConfigError("log-spaced grid axis needs min > 0");
    auto logs = linspace(std::log(min), std::log(max), count);
    for (auto& v : logs) v = std::exp(v);
    logs.front() = min;
    logs.back() = max;
    return logs;
}

std::string to_string(SetMode mode) {
    return mode == SetMode::ClosedForm ? "closed_form" : "monte_carlo";
}

SetMode parse_set_mode(const std::string& name) {
    if (name == "closed_form") return SetMode::ClosedForm;
    if (name == "monte_carlo") return SetMode::MonteCarlo;
    throw ConfigError("unknown resilience-set mode '" + name + "'");
}

std::array<std::string, 2> axis_names(ClassFamily family) {
    if (family == ClassFamily::GaussianProcess) return {"theta", "sigma2"};
    return {"sigma11_sq", "sigma22_sq"};
}

PerturbationClass class_at(const PerturbationClass& base, double x, double y) {
    if (std::holds_alternative<GaussianProcessClass>(base)) return GaussianProcessClass::shared(y, x);
    auto out = base;
    auto fill = [&](std::vector<double>& sigma) {
        const std::size_t split = (sigma.size() + 1) / 2;
        for (std::size_t j = 0; j < sigma.size(); ++j) sigma[j] = j < split ? x : y;
    };
    if (auto* poly = std::get_if<PolynomialClass>(&out))
        fill(poly->sigma_diag);
    else
        fill(std::get<FourierClass>(out).sigma_diag);
    return out;
}

ResilienceSet resilience_set(const AnalysisContext& context, const PerturbationClass& base, const GridSpec& grid,
                             const SetOptions& options, Seed seed) {
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    validate(base);
    const auto xs = grid.x.values();
    const auto ys = grid.y.values();
    const auto family = family_of(base);
    if (family == ClassFamily::GaussianProcess && !(xs.front() > 0.0)) throw ConfigError("theta axis must be > 0");
    if (!(ys.front() >= 0.0) || (family != ClassFamily::GaussianProcess && !(xs.front() >= 0.0)))
        throw ConfigError("variance axes must be >= 0");

    const double mu_b = delta_hat(context.mu_hat_b[1], context.mu_hat_b[0]);
    const double z_alpha = normal_quantile(options.alpha);

    // Closed form: sigma_B^2 is linear in the variance parameters.
    auto variance_slopes = [&](double x) -> std::array<double, 2> {
        auto total = [&](const PerturbationClass& c) {
            return arm_mean_variance(c, 1, context.s_b[1]) + arm_mean_variance(c, 0, context.s_b[0]);
        };
        if (family == ClassFamily::GaussianProcess) return {0.0, total(class_at(base, x, 1.0))};
        return {total(class_at(base, 1.0, 0.0)), total(class_at(base, 0.0, 1.0))};
    };

    auto line_q = [&](std::size_t ix) {
        const double x = xs[ix];
        if (options.mode == SetMode::ClosedForm) {
            const auto slopes = variance_slopes(x);
            return std::function<double(double)>([=](double y) {
                const double var = (family == ClassFamily::GaussianProcess ? 0.0 : slopes[0] * x) + slopes[1] * y;
                return var <= 0.0 ? mu_b : mu_b + std::sqrt(var) * z_alpha;
            });
        }
        // Common random numbers along each x line keep q-hat monotone enough to bisect.
        const Seed line_seed = seed.child(ix);
        return std::function<double(double)>([&, x, line_seed](double y) {
            EstimateOptions eo{options.draws, options.alpha, 1};
            return estimate(context, class_at(base, x, y), eo, line_seed).report.q_alpha_hat;
        });
    };

    ResilienceSet out;
    out.family = family;
    out.alpha = options.alpha;
    out.mode = options.mode;
    out.grid.resize(xs.size() * ys.size());
    std::vector<std::optional<BoundaryPoint>> boundary(xs.size());

    parallel_for(xs.size(), options.mode == SetMode::MonteCarlo ? options.workers : 1, [&](std::size_t ix) {
        const auto q = line_q(ix);
        for (std::size_t iy = 0; iy < ys.size(); ++iy) {
            const double value = q(ys[iy]);
            out.grid[ix * ys.size() + iy] = GridPoint{xs[ix], ys[iy], value, value >= 0.0};
        }
        double lo = ys.front();
        double hi = ys.back();
        const bool lo_member = q(lo) >= 0.0;
        if (lo_member == (q(hi) >= 0.0)) return;
        for (int iter = 0; iter < 200 && hi - lo > options.relative_tolerance * std::max(std::abs(hi), 1e-300);
             ++iter) {
            const double mid = 0.5 * (lo + hi);
            ((q(mid) >= 0.0) == lo_member ? lo : hi) = mid;
        }
        boundary[ix] = BoundaryPoint{xs[ix], 0.5 * (lo + hi)};
    });
    for (const auto& b : boundary)
        if (b) out.boundary.push_back(*b);
    return out;
}

} // namespace spr
