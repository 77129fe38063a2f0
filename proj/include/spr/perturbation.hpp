#pragma once

#include <array>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "spr/rng.hpp"
#include "spr/study.hpp"

namespace spr {

enum class ClassFamily { GaussianProcess, Polynomial, Fourier };

std::string to_string(ClassFamily family);
ClassFamily parse_class_family(const std::string& name);

/// RBF deviation parameters of one arm: amplitude sigma2 and length-scale theta.
struct GpParams {
    double sigma2 = 0.0;
    double theta = 1.0;
};

/// Gaussian-process deviations around the smoothed Study A means.
struct GaussianProcessClass {
    std::array<GpParams, 2> arms;

    /// Common amplitude and length-scale in both arms.
    static GaussianProcessClass shared(double sigma2, double theta);
};

/// Random polynomial deviations sum_j beta_j ((s - center_g) / scale_g)^j, j < d.
struct PolynomialClass {
    std::vector<double> sigma_diag;  // d variances, one per coefficient
    std::array<double, 2> center{0.0, 0.0};
    std::array<double, 2> scale{1.0, 1.0};

    std::size_t degree() const { return sigma_diag.size(); }
};

/// Random trigonometric deviations beta_0 + sum_j beta_j [sin((s-c_g)/B_gj) + cos((s-c_g)/B_gj)].
struct FourierClass {
    std::vector<double> sigma_diag;  // d variances; periods hold d - 1 constants per arm
    std::array<double, 2> offset{0.0, 0.0};
    std::array<std::vector<double>, 2> periods;

    std::size_t degree() const { return sigma_diag.size(); }
};

using PerturbationClass = std::variant<GaussianProcessClass, PolynomialClass, FourierClass>;

ClassFamily family_of(const PerturbationClass& cls);

/// Throws ConfigError when variances are negative or scales/periods not positive.
void validate(const PerturbationClass& cls);

/// Which reading of the Fourier period constants to use.
///  RangeFraction:   B_j = f_j r / (2 pi), so sin((s - c)/B_j) has period f_j r.
///  ReciprocalRange: B_j = 2 pi / (f_j r), the expression used by the simulation settings.
enum class PeriodConvention { RangeFraction, ReciprocalRange };

std::string to_string(PeriodConvention convention);
PeriodConvention parse_period_convention(const std::string& name);

/// User-facing class configuration. Study-A dependent constants (polynomial
/// centering, Fourier offsets and periods) are filled in by realize().
struct ClassSpec {
    ClassFamily family = ClassFamily::GaussianProcess;
    double sigma2 = 1.0;
    double theta = 1.0;
    std::vector<double> sigma_diag{0.25, 0.25, 0.1, 0.1};
    std::vector<double> period_fractions{0.5, 0.25, 0.1};
    PeriodConvention convention = PeriodConvention::RangeFraction;

    static ClassSpec gaussian_process(double sigma2, double theta);
    static ClassSpec polynomial(std::vector<double> sigma_diag);
    static ClassSpec fourier(std::vector<double> sigma_diag, std::vector<double> fractions = {0.5, 0.25, 0.1},
                             PeriodConvention convention = PeriodConvention::RangeFraction);
};

/// Throws ConfigError for negative variances, non-positive theta or period
/// fractions, or a Fourier spec whose fractions do not number d - 1.
void validate(const ClassSpec& spec);

/// Builds the concrete class from Study A: polynomial centre/scale are the arm
/// mean/sd of S_A; Fourier offset is min S_A and periods derive from range(S_A).
PerturbationClass realize(const ClassSpec& spec, const StudyAData& study_a);

/// Squared-exponential covariance sigma2 exp(-(a_i - b_j)^2 / (2 theta^2)).
Eigen::MatrixXd rbf_kernel(std::span<const double> a, std::span<const double> b, double sigma2, double theta);

/// Lower Cholesky factor of K + jitter I. Jitter starts at 1e-8 * scale and
/// grows tenfold up to 1e-2 * scale. Throws CovarianceFactorizationFailure.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& k, double scale);

struct BasisMatrix {
    Eigen::MatrixXd entries;  // n x d, first column all ones
    ClassFamily kind = ClassFamily::Polynomial;
};

/// Basis expansion of `points` for the given arm. Throws ConfigError for the GP class.
BasisMatrix basis_matrix(std::span<const double> points, const PerturbationClass& cls, int group);

/// Linear-Gaussian draw generator for one arm: y = mean + factor * z, z ~ N(0, I).
/// For the GP class `factor` is the jittered Cholesky factor of K; for basis
/// classes it is M diag(sqrt(Sigma)).
class ArmPerturbation {
public:
    ArmPerturbation(Eigen::VectorXd mean, Eigen::MatrixXd factor);

    /// Number of standard normals consumed per draw.
    std::size_t dimension() const { return static_cast<std::size_t>(factor_.cols()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& factor() const { return factor_; }

    /// Full draw at every evaluation point.
    std::vector<double> draw(Stream& stream) const;
    /// Draw from explicit normals (length dimension()).
    Eigen::VectorXd draw(const Eigen::VectorXd& z) const;
    /// Average of one draw over the evaluation points. Consumes the same
    /// normals as draw(), and equals the mean of that draw up to rounding.
    double draw_average(Stream& stream) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd factor_;
    Eigen::RowVectorXd average_weights_;
    double mean_average_ = 0.0;
};

/// Perturbation of arm `group` evaluated at `points` around `mean_values`.
ArmPerturbation make_arm_perturbation(const PerturbationClass& cls, int group, std::span<const double> points,
                                      std::span<const double> mean_values);

/// GP perturbation from a precomputed (unjittered) kernel matrix.
ArmPerturbation make_gp_perturbation(std::span<const double> mean_values, const Eigen::MatrixXd& kernel,
                                     double sigma2);

/// One draw from MVN(mean_values, K) with the RBF kernel on `points`.
std::vector<double> sample_gp(std::span<const double> mean_values, std::span<const double> points, double sigma2,
                              double theta, Stream& stream);

/// mean_values + M beta with beta ~ N(0, diag(sigma_diag)). Throws DimensionMismatch.
std::vector<double> sample_basis(std::span<const double> mean_values, const BasisMatrix& basis,
                                 std::span<const double> sigma_diag, Stream& stream);

/// Exact normal law of the plug-in treatment effect under a class.
struct ClosedFormMoments {
    double mu_b = 0.0;
    double sigma_b2 = 0.0;
};

ClosedFormMoments closed_form_moments(std::span<const double> mu1_values, std::span<const double> mu0_values,
                                      std::span<const double> s_b1, std::span<const double> s_b0,
                                      const PerturbationClass& cls);

/// Contribution of one arm to sigma_B^2: (1/n^2) 1' Cov 1.
double arm_mean_variance(const PerturbationClass& cls, int group, std::span<const double> points);

} // namespace spr
