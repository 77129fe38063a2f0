#include "spr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spr/error.hpp"
#include "spr/parallel.hpp"

namespace spr {

std::string to_string(ResampleScope scope) {
    return scope == ResampleScope::StudyBOnly ? "study_b_only" : "both_studies";
}

ResampleScope parse_resample_scope(const std::string& name) {
    if (name == "study_b_only") return ResampleScope::StudyBOnly;
    if (name == "both_studies") return ResampleScope::BothStudies;
    throw ConfigError("unknown bootstrap scope '" + name + "'");
}

Seed point_estimate_seed(Seed master) {
    return master.child(stream_tag::draws);
}

double replicate_sd(const std::vector<double>& values) {
    return sample_sd(values);
}

namespace {

std::vector<std::size_t> resample_indices(std::size_t n, Stream& stream) {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = stream.index(n);
    return idx;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& k, const std::vector<std::size_t>& idx) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = k(static_cast<Eigen::Index>(idx[i]), static_cast<Eigen::Index>(idx[j]));
    return out;
}

bool single_unique(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

} // namespace

BootstrapResult bootstrap(const StudyAData& study_a, const StudyBData& study_b, const ClassSpec& spec,
                          const SmootherConfig& smoother, const EstimateOptions& estimate_options,
                          const BootstrapOptions& options, Seed master) {
    if (options.replicates < 2) throw ConfigError("bootstrap needs B >= 2");
    const auto base_context = make_context(study_a, study_b, smoother);
    const auto base_class = realize(spec, study_a);

    // Kernel on the observed Study B surrogates; resampled kernels are gathers of it.
    std::array<Eigen::MatrixXd, 2> kernels;
    if (const auto* gp = std::get_if<GaussianProcessClass>(&base_class))
        for (int g : kArms)
            kernels[g] = rbf_kernel(base_context.s_b[g], base_context.s_b[g], gp->arms[g].sigma2, gp->arms[g].theta);

    BootstrapResult result;
    result.replicate_count = options.replicates;
    result.scope = options.scope;
    result.replicates.resize(options.replicates);

    parallel_for(options.replicates, options.workers, [&](std::size_t b) {
        const Seed replicate_seed = master.child(stream_tag::replicate).child(b);
        std::array<std::vector<std::size_t>, 2> b_idx;
        std::array<std::vector<double>, 2> mu_values;
        PerturbationClass cls = base_class;

        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt > options.max_retries)
                throw DegenerateResample("bootstrap replicate " + std::to_string(b) + " stayed degenerate after " +
                                         std::to_string(options.max_retries) + " retries");
            Stream stream(master.child(stream_tag::resample).child(b).child(attempt));
            for (int g : kArms) b_idx[g] = resample_indices(study_b.surrogates[g].size(), stream);
            if (options.scope == ResampleScope::StudyBOnly) {
                for (int g : kArms) mu_values[g] = gather(base_context.mu_hat_b[g], b_idx[g]);
                break;
            }
            StudyAData resampled;
            bool degenerate = false;
            for (int g : kArms) {
                const auto a_idx = resample_indices(study_a.arms[g].surrogates.size(), stream);
                resampled.arms[g].surrogates = gather(study_a.arms[g].surrogates, a_idx);
                resampled.arms[g].outcomes = gather(study_a.arms[g].outcomes, a_idx);
                degenerate = degenerate || single_unique(resampled.arms[g].surrogates);
            }
            if (degenerate) continue;
            cls = realize(spec, resampled);
            for (int g : kArms) {
                const auto fit = fit_arm(resampled.arms[g].surrogates, resampled.arms[g].outcomes, g, smoother);
                mu_values[g] = fit.evaluate(gather(study_b.surrogates[g], b_idx[g]));
            }
            break;
        }

        std::vector<ArmPerturbation> arms;
        for (int g : kArms) {
            if (const auto* gp = std::get_if<GaussianProcessClass>(&cls)) {
                arms.push_back(make_gp_perturbation(mu_values[g], gather(kernels[g], b_idx[g]), gp->arms[g].sigma2));
            } else {
                arms.push_back(
                    make_arm_perturbation(cls, g, gather(study_b.surrogates[g], b_idx[g]), mu_values[g]));
            }
        }
        const Seed draw_seed =
            options.common_random_numbers ? point_estimate_seed(master) : replicate_seed.child(stream_tag::draws);
        const auto deltas = draw_deltas({arms[0], arms[1]}, estimate_options.draws, draw_seed, 1);
        result.replicates[b] = {resilience_probability(deltas), resilience_bound(deltas, estimate_options.alpha)};
    });

    std::vector<double> ps;
    std::vector<double> qs;
    for (const auto& r : result.replicates) {
        ps.push_back(r.p_hat);
        qs.push_back(r.q_alpha_hat);
    }
    result.se_p = replicate_sd(ps);
    result.se_q = replicate_sd(qs);
    return result;
}

PreconditionReport check_preconditions(const StudyAData& study_a, const StudyBData& study_b) {
    PreconditionReport report;
    const char* arm_name[2] = {"control (0)", "treated (1)"};
    for (int g : kArms) {
        report.study_a_nonempty[g] = !study_a.arms[g].surrogates.empty();
        report.study_b_nonempty[g] = !study_b.surrogates[g].empty();
        if (!report.study_a_nonempty[g]) report.warnings.push_back(std::string("Study A arm ") + arm_name[g] + " is empty");
        if (!report.study_b_nonempty[g]) report.warnings.push_back(std::string("Study B arm ") + arm_name[g] + " is empty");
        if (report.study_a_nonempty[g] &&
            study_a.arms[g].outcomes.size() != study_a.arms[g].surrogates.size())
            report.warnings.push_back(std::string("Study A outcomes missing in arm ") + arm_name[g]);
    }

    if (report.study_b_nonempty[0] && report.study_b_nonempty[1]) {
        report.delta_sb_hat = sample_mean(study_b.surrogates[1]) - sample_mean(study_b.surrogates[0]);
        if (!(report.delta_sb_hat > 0.0)) {
            std::ostringstream msg;
            msg << "Study B treatment effect on the surrogate is not positive (delta_SB_hat = " << report.delta_sb_hat
                << ")";
            report.warnings.push_back(msg.str());
        }
    }

    std::size_t outside_total = 0;
    std::size_t b_total = 0;
    for (int g : kArms) {
        const auto& sa = study_a.arms[g].surrogates;
        const auto& sb = study_b.surrogates[g];
        b_total += sb.size();
        if (sa.empty() || sb.empty()) continue;
        const auto [lo, hi] = std::minmax_element(sa.begin(), sa.end());
        const auto outside = static_cast<std::size_t>(
            std::count_if(sb.begin(), sb.end(), [&](double s) { return s < *lo || s > *hi; }));
        outside_total += outside;
        if (outside > 0) {
            std::ostringstream msg;
            msg << "Study B support extends beyond Study A support in arm " << arm_name[g] << ": " << outside << " of "
                << sb.size() << " points (" << 100.0 * static_cast<double>(outside) / static_cast<double>(sb.size())
                << "%) outside [" << *lo << ", " << *hi << "]";
            report.warnings.push_back(msg.str());
        }
    }
    if (b_total > 0) report.extrapolation_fraction = static_cast<double>(outside_total) / static_cast<double>(b_total);
    return report;
}

} // namespace spr
