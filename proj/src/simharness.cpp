#include "spr/simharness.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spr/error.hpp"
#include "spr/parallel.hpp"

namespace spr::sim {

double MeanFunction::operator()(double s) const {
    switch (shape) {
    case MeanShape::Linear:
        return a * s + b;
    case MeanShape::ShiftedSquare:
        return (s - a) * (s - a) + b;
    case MeanShape::Trigonometric:
        return b + a * (std::sin(s) + std::cos(s));
    }
    return 0.0;
}

namespace {

MeanFunction linear(double slope, double intercept) { return {MeanShape::Linear, slope, intercept}; }

std::vector<SimulationSetting> build_settings() {
    const std::array<MeanFunction, 2> quad{MeanFunction{MeanShape::ShiftedSquare, 0.5, -1.0}, linear(3.0, 1.0)};
    const std::array<MeanFunction, 2> trig{MeanFunction{MeanShape::Trigonometric, 0.4, 0.2},
                                           MeanFunction{MeanShape::Trigonometric, 0.85, 0.6}};
    const auto poly = ClassSpec::polynomial({0.25, 0.25, 0.1, 0.1});
    const auto four_wide = ClassSpec::fourier({0.5, 0.5, 0.1, 0.1}, {0.5, 0.25, 0.1}, PeriodConvention::ReciprocalRange);
    const auto four_narrow =
        ClassSpec::fourier({0.05, 0.05, 0.01, 0.01}, {0.5, 0.25, 0.1}, PeriodConvention::ReciprocalRange);

    std::vector<SimulationSetting> out;
    out.push_back({1, "paradox likely, GP", {{{3, 3}, {4, 3}}}, {{{4.75, 1}, {5.25, 1}}},
                   {linear(2, -1), linear(1, 3)}, ClassSpec::gaussian_process(0.30, 5), 1.0,
                   {0.517, 0.522, 0.093, 0.091, -1.058, -1.017, 0.184, 0.187}});
    out.push_back({2, "paradox possible, GP", {{{3, 3}, {4, 3}}}, {{{4.75, 1}, {5.25, 1}}},
                   {linear(2, -1.25), linear(1, 3)}, ClassSpec::gaussian_process(0.25, 5), 1.0,
                   {0.374, 0.387, 0.096, 0.095, -0.723, -0.682, 0.183, 0.185}});
    out.push_back({3, "paradox unlikely, GP", {{{2, 3}, {3, 3}}}, {{{1.75, 1}, {2.75, 1}}},
                   {linear(1.5, 1), linear(3, -2)}, ClassSpec::gaussian_process(1.0, 1.0), 3.0,
                   {0.009, 0.008, 0.007, 0.008, 1.197, 1.285, 0.263, 0.272}});
    out.push_back({4, "paradox likely, polynomial", {{{0.9, 1.5}, {2.2, 4.5}}}, {{{-0.7, 1}, {-0.2, 2}}}, quad, poly,
                   1.0, {0.502, 0.496, 0.060, 0.062, -2.911, -2.969, 0.544, 0.509}});
    out.push_back({5, "paradox possible, polynomial", {{{0.9, 1.5}, {2.2, 4.5}}}, {{{-0.5, 1}, {0, 2}}}, quad, poly,
                   1.0, {0.312, 0.325, 0.067, 0.067, -1.598, -1.617, 0.486, 0.464}});
    out.push_back({6, "paradox unlikely, polynomial", {{{0.9, 1.5}, {2.2, 4.5}}}, {{{-0.08, 1}, {0.45, 2}}}, quad,
                   poly, 1.0, {0.031, 0.033, 0.024, 0.024, 0.918, 0.865, 0.393, 0.391}});
    out.push_back({7, "paradox likely, Fourier", {{{5, 1}, {6, 2}}}, {{{4.1, 0.5}, {4.5, 0.5}}}, trig, four_wide, 0.05,
                   {0.478, 0.465, 0.025, 0.024, -1.950, -1.976, 0.167, 0.133}});
    out.push_back({8, "paradox possible, Fourier", {{{5, 1}, {6, 2}}}, {{{4.7, 1}, {5.4, 1}}}, trig, four_narrow, 0.05,
                   {0.103, 0.104, 0.027, 0.025, -0.008, -0.004, 0.074, 0.068}});
    out.push_back({9, "paradox unlikely, Fourier", {{{5, 1}, {6, 2}}}, {{{5.5, 0.5}, {6.5, 0.5}}}, trig, four_narrow,
                   0.05, {0.014, 0.010, 0.006, 0.005, 0.500, 0.524, 0.068, 0.055}});
    return out;
}

const std::vector<SimulationSetting>& all_settings() {
    static const std::vector<SimulationSetting> settings = build_settings();
    return settings;
}

} // namespace

const SimulationSetting& setting(int id) {
    for (const auto& s : all_settings())
        if (s.id == id) return s;
    throw ConfigError("unknown simulation setting " + std::to_string(id));
}

std::vector<int> setting_ids() {
    std::vector<int> ids;
    for (const auto& s : all_settings()) ids.push_back(s.id);
    return ids;
}

const std::vector<Misspecification>& misspecifications() {
    static const std::vector<Misspecification> runs{
        {2, ClassSpec::fourier({0.25, 0.25, 0.1, 0.1}, {0.5, 0.25, 0.1}, PeriodConvention::ReciprocalRange),
         {0.383, 0.425, 0.068, 0.067, -0.688, -1.154, 0.214, 0.195}},
        {4, ClassSpec::gaussian_process(0.25, 2.0), {0.540, 0.490, 0.200, 0.178, -3.323, -0.770, 0.359, 0.348}},
        {9, ClassSpec::polynomial({0.05, 0.05, 0.01, 0.01}), {0.014, 0.001, 0.001, 0.002, 0.500, 0.680, 0.053, 0.053}},
    };
    return runs;
}

const Misspecification* misspecification_for(int setting_id) {
    for (const auto& m : misspecifications())
        if (m.setting_id == setting_id) return &m;
    return nullptr;
}

GeneratedData generate_setting(const SimulationSetting& setting, const GenerationOptions& options, Seed seed) {
    if (options.n_a < 2 || options.n_b < 2) throw ConfigError("simulation needs at least 2 subjects per arm");
    Stream stream(seed);
    const double noise_sd = std::sqrt(setting.noise_variance);
    GeneratedData data;

    for (int g : kArms) {
        auto& arm = data.study_a.arms[g];
        const double sd = std::sqrt(setting.surrogate_a[g].variance);
        arm.surrogates.resize(options.n_a);
        for (auto& s : arm.surrogates) s = stream.normal(setting.surrogate_a[g].mean, sd);
        arm.outcomes.resize(options.n_a);
        for (std::size_t i = 0; i < options.n_a; ++i)
            arm.outcomes[i] = setting.m[g](arm.surrogates[i]) + noise_sd * stream.normal();
    }
    if (options.study_a_structure && setting.class_truth.family == ClassFamily::GaussianProcess) {
        for (int g : kArms) {
            auto& arm = data.study_a.arms[g];
            arm.outcomes = sample_gp(arm.outcomes, arm.surrogates, setting.class_truth.sigma2, setting.class_truth.theta,
                                     stream);
        }
    }

    for (int g : kArms) {
        const double sd = std::sqrt(setting.surrogate_b[g].variance);
        data.study_b.surrogates[g].resize(options.n_b);
        for (auto& s : data.study_b.surrogates[g]) s = stream.normal(setting.surrogate_b[g].mean, sd);
    }

    const auto cls = realize(setting.class_truth, data.study_a);
    for (int g : kArms) {
        const auto& arm = data.study_a.arms[g];
        const auto fit = fit_arm(arm.surrogates, arm.outcomes, g, options.smoother);
        const auto& s_b = data.study_b.surrogates[g];
        data.hidden.centers[g] = fit.evaluate(s_b);
        data.hidden.conditional_means[g] = make_arm_perturbation(cls, g, s_b, data.hidden.centers[g]).draw(stream);
        data.hidden.outcomes[g] = data.hidden.conditional_means[g];
        for (auto& y : data.hidden.outcomes[g]) y += noise_sd * stream.normal();
    }
    return data;
}

OracleResult true_p0_oracle(const SimulationSetting& setting, const GenerationOptions& options,
                            std::size_t replications, double alpha, Seed seed, std::size_t workers) {
    if (replications < 1) throw ConfigError("oracle needs at least one replication");
    std::vector<double> deltas(replications);
    std::vector<double> closed(replications);
    parallel_for(replications, workers, [&](std::size_t r) {
        const auto data = generate_setting(setting, options, seed.child(r));
        const auto& cm = data.hidden.conditional_means;
        deltas[r] = delta_hat(cm[1], cm[0]);
        const auto cls = realize(setting.class_truth, data.study_a);
        const auto moments = closed_form_moments(data.hidden.centers[1], data.hidden.centers[0],
                                                 data.study_b.surrogates[1], data.study_b.surrogates[0], cls);
        closed[r] = closed_form_probability(moments);
    });
    OracleResult out;
    out.replications = replications;
    out.p0 = resilience_probability(deltas);
    out.q_alpha = resilience_bound(deltas, alpha);
    out.mean_p_closed = sample_mean(closed);
    out.mc_se = std::sqrt(out.p0 * (1.0 - out.p0) / static_cast<double>(replications));
    return out;
}

std::vector<StudyRun> standard_runs(const std::vector<int>& ids, bool include_misspecified) {
    std::vector<StudyRun> runs;
    for (int id : ids) runs.push_back({id, std::nullopt});
    if (include_misspecified)
        for (int id : ids)
            if (const auto* m = misspecification_for(id)) runs.push_back({id, m->estimator});
    return runs;
}

namespace {

Seed setting_seed(Seed master, int id) {
    return master.child(stream_tag::setting).child(static_cast<std::uint64_t>(id));
}

ReplicationOutcome run_replication(const SimulationSetting& setting, const ClassSpec& estimator,
                                   const HarnessConfig& config, Seed rep_seed) {
    ReplicationOutcome out;
    try {
        const auto data = generate_setting(setting, config.generation, rep_seed.child(stream_tag::generate));
        const auto ctx = make_context(data.study_a, data.study_b, config.generation.smoother);
        EstimateOptions est = config.estimate;
        est.workers = 1;
        const auto result = estimate(ctx, realize(estimator, data.study_a), est, point_estimate_seed(rep_seed));
        out.p_hat = result.report.p_hat;
        out.q_alpha_hat = result.report.q_alpha_hat;
        out.p_closed = result.report.p_closed;
        out.q_closed = result.report.q_closed;
        if (config.bootstrap.replicates > 0) {
            BootstrapOptions boot = config.bootstrap;
            boot.workers = 1;
            const auto se =
                bootstrap(data.study_a, data.study_b, estimator, config.generation.smoother, est, boot, rep_seed);
            out.se_p = se.se_p;
            out.se_q = se.se_q;
        }
    } catch (const NumericError& e) {
        out.failed = true;
        out.failure = e.what();
    }
    return out;
}

SummaryColumn summarize(const std::vector<double>& estimates, const std::vector<double>& ses, double truth,
                        double published_truth, double published_estimate, double published_ese, double published_ase) {
    SummaryColumn c;
    c.truth = truth;
    c.published_truth = published_truth;
    c.published_estimate = published_estimate;
    c.published_ese = published_ese;
    c.published_ase = published_ase;
    c.mean = sample_mean(estimates);
    c.truth_minus_estimate = truth - c.mean;
    c.ese = estimates.size() > 1 ? sample_sd(estimates) : 0.0;
    c.ase = ses.empty() ? 0.0 : sample_mean(ses);
    c.lower = resilience_bound(estimates, 0.025);
    c.upper = resilience_bound(estimates, 0.975);
    return c;
}

} // namespace

SimulationReport run_study(const std::vector<StudyRun>& runs, const HarnessConfig& config, Seed seed) {
    if (config.replications < 2) throw ConfigError("run_study needs R >= 2");
    SimulationReport report;
    report.replications = config.replications;
    report.oracle_replications = config.oracle_replications;

    std::map<int, OracleResult> oracles;
    for (const auto& run : runs) {
        const auto& st = setting(run.setting_id);
        if (!oracles.contains(st.id))
            oracles[st.id] = true_p0_oracle(st, config.generation, config.oracle_replications, config.estimate.alpha,
                                            setting_seed(seed, st.id).child(stream_tag::oracle), config.workers);

        const ClassSpec estimator = run.estimator.value_or(st.class_truth);
        SettingRow row;
        row.setting_id = st.id;
        row.description = st.description;
        row.algorithm = estimator.family;
        row.misspecified = run.misspecified();
        row.replications.resize(config.replications);
        const Seed base = setting_seed(seed, st.id).child(stream_tag::replicate);
        parallel_for(config.replications, config.workers, [&](std::size_t r) {
            row.replications[r] = run_replication(st, estimator, config, base.child(r));
        });

        std::vector<double> ps, qs, sps, sqs, pcs;
        for (const auto& rep : row.replications) {
            if (rep.failed) {
                ++row.failures;
                continue;
            }
            ps.push_back(rep.p_hat);
            qs.push_back(rep.q_alpha_hat);
            pcs.push_back(rep.p_closed);
            if (config.bootstrap.replicates > 0) {
                sps.push_back(rep.se_p);
                sqs.push_back(rep.se_q);
            }
        }
        if (static_cast<double>(row.failures) > config.max_failure_fraction * static_cast<double>(config.replications))
            throw NumericError("setting " + std::to_string(st.id) + ": " + std::to_string(row.failures) + " of " +
                               std::to_string(config.replications) + " replications failed");

        const auto& oracle = oracles[st.id];
        PublishedReference published = st.published;
        if (run.misspecified()) {
            const auto* m = misspecification_for(st.id);
            published = m ? m->published : PublishedReference{};
        }
        row.p = summarize(ps, sps, oracle.p0, published.truth_p, published.estimate_p, published.ese_p, published.ase_p);
        row.q = summarize(qs, sqs, oracle.q_alpha, published.truth_q, published.estimate_q, published.ese_q, published.ase_q);
        row.mean_p_closed = sample_mean(pcs);
        row.oracle_mean_p_closed = oracle.mean_p_closed;
        row.oracle_mc_se = oracle.mc_se;
        report.rows.push_back(std::move(row));
    }
    return report;
}

} // namespace spr::sim
