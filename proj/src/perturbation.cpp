#include "spr/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spr/error.hpp"
#include "spr/smoother.hpp"

namespace spr {

std::string to_string(ClassFamily family) {
    switch (family) {
        case ClassFamily::GaussianProcess: return "gp";
        case ClassFamily::Polynomial: return "polynomial";
        case ClassFamily::Fourier: return "fourier";
    }
    return "unknown";
}

ClassFamily parse_class_family(const std::string& name) {
    if (name == "gp" || name == "GP" || name == "gaussian_process") return ClassFamily::GaussianProcess;
    if (name == "polynomial" || name == "poly") return ClassFamily::Polynomial;
    if (name == "fourier") return ClassFamily::Fourier;
    throw ConfigError("unknown class family '" + name + "'");
}

std::string to_string(PeriodConvention convention) {
    return convention == PeriodConvention::RangeFraction ? "range_fraction" : "reciprocal_range";
}

PeriodConvention parse_period_convention(const std::string& name) {
    if (name == "range_fraction") return PeriodConvention::RangeFraction;
    if (name == "reciprocal_range") return PeriodConvention::ReciprocalRange;
    throw ConfigError("unknown Fourier period convention '" + name + "'");
}

GaussianProcessClass GaussianProcessClass::shared(double sigma2, double theta) {
    return GaussianProcessClass{{GpParams{sigma2, theta}, GpParams{sigma2, theta}}};
}

ClassFamily family_of(const PerturbationClass& cls) {
    return static_cast<ClassFamily>(cls.index());
}

namespace {

void check_variances(const std::vector<double>& sigma_diag) {
    if (sigma_diag.empty()) throw ConfigError("Sigma must have at least one diagonal entry");
    for (double v : sigma_diag)
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("Sigma diagonal entries must be finite and >= 0");
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

} // namespace

void validate(const PerturbationClass& cls) {
    if (const auto* gp = std::get_if<GaussianProcessClass>(&cls)) {
        for (const auto& p : gp->arms) {
            if (!(p.sigma2 >= 0.0) || !std::isfinite(p.sigma2)) throw ConfigError("GP sigma2 must be >= 0");
            if (!positive(p.theta)) throw ConfigError("GP theta must be > 0");
        }
    } else if (const auto* poly = std::get_if<PolynomialClass>(&cls)) {
        check_variances(poly->sigma_diag);
        for (double z : poly->scale)
            if (!positive(z)) throw ConfigError("polynomial scale must be > 0");
    } else {
        const auto& f = std::get<FourierClass>(cls);
        check_variances(f.sigma_diag);
        for (const auto& arm : f.periods) {
            if (arm.size() + 1 != f.sigma_diag.size())
                throw ConfigError("Fourier class needs d - 1 periods per arm");
            for (double b : arm)
                if (!positive(b)) throw ConfigError("Fourier periods must be > 0");
        }
    }
}

void validate(const ClassSpec& spec) {
    switch (spec.family) {
    case ClassFamily::GaussianProcess:
        if (!(spec.sigma2 >= 0.0) || !std::isfinite(spec.sigma2)) throw ConfigError("GP sigma2 must be >= 0");
        if (!positive(spec.theta)) throw ConfigError("GP theta must be > 0");
        break;
    case ClassFamily::Fourier:
        if (spec.period_fractions.size() + 1 != spec.sigma_diag.size())
            throw ConfigError("Fourier class needs d - 1 period fractions");
        for (double f : spec.period_fractions)
            if (!positive(f)) throw ConfigError("Fourier period fractions must be > 0");
        [[fallthrough]];
    case ClassFamily::Polynomial:
        check_variances(spec.sigma_diag);
        break;
    }
}

ClassSpec ClassSpec::gaussian_process(double sigma2, double theta) {
    ClassSpec spec;
    spec.family = ClassFamily::GaussianProcess;
    spec.sigma2 = sigma2;
    spec.theta = theta;
    return spec;
}

ClassSpec ClassSpec::polynomial(std::vector<double> sigma_diag) {
    ClassSpec spec;
    spec.family = ClassFamily::Polynomial;
    spec.sigma_diag = std::move(sigma_diag);
    return spec;
}

ClassSpec ClassSpec::fourier(std::vector<double> sigma_diag, std::vector<double> fractions,
                             PeriodConvention convention) {
    ClassSpec spec;
    spec.family = ClassFamily::Fourier;
    spec.sigma_diag = std::move(sigma_diag);
    spec.period_fractions = std::move(fractions);
    spec.convention = convention;
    return spec;
}

PerturbationClass realize(const ClassSpec& spec, const StudyAData& study_a) {
    PerturbationClass out;
    switch (spec.family) {
        case ClassFamily::GaussianProcess:
            out = GaussianProcessClass::shared(spec.sigma2, spec.theta);
            break;
        case ClassFamily::Polynomial: {
            PolynomialClass poly;
            poly.sigma_diag = spec.sigma_diag;
            for (int g : kArms) {
                const auto& s = study_a.arms[g].surrogates;
                if (s.size() < 2) throw DegenerateSample("polynomial class needs >= 2 Study A surrogates per arm");
                poly.center[g] = sample_mean(s);
                poly.scale[g] = sample_sd(s);
                if (!(poly.scale[g] > 0.0)) throw DegenerateSample("Study A surrogates have zero spread");
            }
            out = std::move(poly);
            break;
        }
        case ClassFamily::Fourier: {
            if (spec.period_fractions.size() + 1 != spec.sigma_diag.size())
                throw ConfigError("Fourier class needs exactly d - 1 period fractions");
            FourierClass f;
            f.sigma_diag = spec.sigma_diag;
            for (int g : kArms) {
                const auto& s = study_a.arms[g].surrogates;
                if (s.empty()) throw EmptyGroup("Fourier class needs Study A surrogates");
                const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
                const double range = *hi - *lo;
                if (!(range > 0.0)) throw DegenerateSample("Study A surrogates have zero range");
                f.offset[g] = *lo;
                for (double frac : spec.period_fractions) {
                    const double b = spec.convention == PeriodConvention::RangeFraction
                                         ? frac * range / (2.0 * std::numbers::pi)
                                         : 2.0 * std::numbers::pi / (frac * range);
                    f.periods[g].push_back(b);
                }
            }
            out = std::move(f);
            break;
        }
    }
    validate(out);
    return out;
}

Eigen::MatrixXd rbf_kernel(std::span<const double> a, std::span<const double> b, double sigma2, double theta) {
    Eigen::MatrixXd k(a.size(), b.size());
    const double inv = 1.0 / (2.0 * theta * theta);
    for (std::size_t j = 0; j < b.size(); ++j)
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[j];
            k(i, j) = sigma2 * std::exp(-d * d * inv);
        }
    return k;
}

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& k, double scale) {
    const auto n = k.rows();
    for (double jitter = 1e-8; jitter <= 1e-2 * (1.0 + 1e-9); jitter *= 10.0) {
        Eigen::MatrixXd shifted = k;
        shifted.diagonal().array() += jitter * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd l = llt.matrixL();
            if (l.allFinite()) return l;
        }
    }
    throw CovarianceFactorizationFailure("covariance matrix of size " + std::to_string(n) +
                                         " is not positive definite even with jitter 1e-2 * sigma2");
}

BasisMatrix basis_matrix(std::span<const double> points, const PerturbationClass& cls, int group) {
    BasisMatrix out;
    if (const auto* poly = std::get_if<PolynomialClass>(&cls)) {
        const auto d = poly->degree();
        out.kind = ClassFamily::Polynomial;
        out.entries.resize(points.size(), d);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double z = (points[i] - poly->center[group]) / poly->scale[group];
            double power = 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                out.entries(i, j) = power;
                power *= z;
            }
        }
    } else if (const auto* f = std::get_if<FourierClass>(&cls)) {
        const auto d = f->degree();
        out.kind = ClassFamily::Fourier;
        out.entries.resize(points.size(), d);
        for (std::size_t i = 0; i < points.size(); ++i) {
            out.entries(i, 0) = 1.0;
            const double u = points[i] - f->offset[group];
            for (std::size_t j = 1; j < d; ++j) {
                const double arg = u / f->periods[group][j - 1];
                out.entries(i, j) = std::sin(arg) + std::cos(arg);
            }
        }
    } else {
        throw ConfigError("basis_matrix is defined for polynomial and Fourier classes only");
    }
    return out;
}

ArmPerturbation::ArmPerturbation(Eigen::VectorXd mean, Eigen::MatrixXd factor)
    : mean_(std::move(mean)), factor_(std::move(factor)) {
    if (factor_.rows() != mean_.size()) throw DimensionMismatch("factor rows must match the number of points");
    const double n = static_cast<double>(mean_.size());
    average_weights_ = factor_.colwise().sum() / n;
    mean_average_ = mean_.sum() / n;
}

std::vector<double> ArmPerturbation::draw(Stream& stream) const {
    Eigen::VectorXd z(factor_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = stream.normal();
    const Eigen::VectorXd y = draw(z);
    return {y.data(), y.data() + y.size()};
}

Eigen::VectorXd ArmPerturbation::draw(const Eigen::VectorXd& z) const {
    if (z.size() != factor_.cols()) throw DimensionMismatch("normal vector has wrong length");
    if (factor_.cols() == 0) return mean_;
    return mean_ + factor_ * z;
}

double ArmPerturbation::draw_average(Stream& stream) const {
    double acc = mean_average_;
    for (Eigen::Index i = 0; i < factor_.cols(); ++i) acc += average_weights_[i] * stream.normal();
    return acc;
}

namespace {

Eigen::VectorXd to_vector(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

ArmPerturbation make_gp_perturbation(std::span<const double> mean_values, const Eigen::MatrixXd& kernel,
                                     double sigma2) {
    const auto n = static_cast<Eigen::Index>(mean_values.size());
    if (kernel.rows() != n || kernel.cols() != n) throw DimensionMismatch("kernel size must match mean length");
    if (sigma2 == 0.0) return ArmPerturbation(to_vector(mean_values), Eigen::MatrixXd(n, 0));
    return ArmPerturbation(to_vector(mean_values), cholesky_with_jitter(kernel, sigma2));
}

ArmPerturbation make_arm_perturbation(const PerturbationClass& cls, int group, std::span<const double> points,
                                      std::span<const double> mean_values) {
    if (points.size() != mean_values.size()) throw DimensionMismatch("points and mean values differ in length");
    if (points.empty()) throw EmptyGroup("no evaluation points in arm " + std::to_string(group));
    if (const auto* gp = std::get_if<GaussianProcessClass>(&cls)) {
        const auto& p = gp->arms[group];
        if (p.sigma2 == 0.0)
            return ArmPerturbation(to_vector(mean_values), Eigen::MatrixXd(points.size(), 0));
        return make_gp_perturbation(mean_values, rbf_kernel(points, points, p.sigma2, p.theta), p.sigma2);
    }
    const BasisMatrix basis = basis_matrix(points, cls, group);
    const auto& sigma = std::holds_alternative<PolynomialClass>(cls) ? std::get<PolynomialClass>(cls).sigma_diag
                                                                     : std::get<FourierClass>(cls).sigma_diag;
    Eigen::VectorXd sd(sigma.size());
    for (std::size_t j = 0; j < sigma.size(); ++j) sd[j] = std::sqrt(sigma[j]);
    return ArmPerturbation(to_vector(mean_values), basis.entries * sd.asDiagonal());
}

std::vector<double> sample_gp(std::span<const double> mean_values, std::span<const double> points, double sigma2,
                              double theta, Stream& stream) {
    if (points.size() != mean_values.size()) throw DimensionMismatch("points and mean values differ in length");
    return make_arm_perturbation(GaussianProcessClass::shared(sigma2, theta), 0, points, mean_values).draw(stream);
}

std::vector<double> sample_basis(std::span<const double> mean_values, const BasisMatrix& basis,
                                 std::span<const double> sigma_diag, Stream& stream) {
    if (static_cast<std::size_t>(basis.entries.cols()) != sigma_diag.size())
        throw DimensionMismatch("basis has " + std::to_string(basis.entries.cols()) + " columns but Sigma is " +
                                std::to_string(sigma_diag.size()) + "-dimensional");
    if (static_cast<std::size_t>(basis.entries.rows()) != mean_values.size())
        throw DimensionMismatch("basis rows must match mean length");
    Eigen::VectorXd beta(sigma_diag.size());
    for (std::size_t j = 0; j < sigma_diag.size(); ++j) beta[j] = std::sqrt(sigma_diag[j]) * stream.normal();
    const Eigen::VectorXd y = to_vector(mean_values) + basis.entries * beta;
    return {y.data(), y.data() + y.size()};
}

double arm_mean_variance(const PerturbationClass& cls, int group, std::span<const double> points) {
    const double n = static_cast<double>(points.size());
    if (const auto* gp = std::get_if<GaussianProcessClass>(&cls)) {
        const auto& p = gp->arms[group];
        if (p.sigma2 == 0.0) return 0.0;
        return rbf_kernel(points, points, p.sigma2, p.theta).sum() / (n * n);
    }
    const BasisMatrix basis = basis_matrix(points, cls, group);
    const auto& sigma = std::holds_alternative<PolynomialClass>(cls) ? std::get<PolynomialClass>(cls).sigma_diag
                                                                     : std::get<FourierClass>(cls).sigma_diag;
    const Eigen::RowVectorXd col_means = basis.entries.colwise().sum() / n;
    double v = 0.0;
    for (Eigen::Index j = 0; j < col_means.size(); ++j) v += sigma[j] * col_means[j] * col_means[j];
    return v;
}

ClosedFormMoments closed_form_moments(std::span<const double> mu1_values, std::span<const double> mu0_values,
                                      std::span<const double> s_b1, std::span<const double> s_b0,
                                      const PerturbationClass& cls) {
    if (mu1_values.size() != s_b1.size() || mu0_values.size() != s_b0.size())
        throw DimensionMismatch("mean values and surrogate vectors differ in length");
    if (mu1_values.empty() || mu0_values.empty()) throw EmptyGroup("closed-form moments need nonempty arms");
    ClosedFormMoments m;
    m.mu_b = sample_mean(mu1_values) - sample_mean(mu0_values);
    m.sigma_b2 = arm_mean_variance(cls, 1, s_b1) + arm_mean_variance(cls, 0, s_b0);
    return m;
}

} // namespace spr
