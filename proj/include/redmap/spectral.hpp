#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redmap/reduced.hpp"

namespace redmap {

/// Sampled stand-in for a compact neighbourhood: `samples` points drawn
/// uniformly from the ball, the first of which is the center itself.
struct Region {
  Vec center;
  double radius = 1.0;
  int samples = 1;
  std::uint64_t seed = 0;
};

void validate(const Region& r);
std::vector<Vec> sample_region(const Region& r);

enum class Exec { Serial, Parallel };

inline constexpr double kDefaultMultTol = 1e-8;

/// Every pointwise spectral quantity at one x1 on the feasible manifold.
struct PointSpectra {
  double sigma_max_full = 0.0;   // sigma_max(hess f(Phi(x1)))
  int multiplicity = 0;          // p: size of the dominant cluster
  double gap = 0.0;              // sigma_max - sigma_{p+1} (0 when p == n)
  double epsilon = 0.0;          // 1 - max ||P_T v|| over unit v in the dominant subspace
  double riem_sigma = 0.0;       // max |lambda| of the pencil (hess F, R)
  double riem_min = 0.0;         // extreme eigenvalues of the pencil (hess F, R)
  double riem_max = 0.0;
  double gauss_riem_sigma = 0.0; // max |lambda| of the pencil (DPhi^T hess f DPhi, R)
  double eucl_sigma = 0.0;       // sigma_max(hess F)
  double eucl_min = 0.0;         // extreme eigenvalues of hess F
  double eucl_max = 0.0;
  double m_phi = 0.0;            // lambda_min(R)
  double M_phi = 0.0;            // lambda_max(R)
  double q = 0.0;                // injective-norm bound of D2Psi
  double z = 0.0;                // ||grad_{x2} f(Phi(x1))||
  double correction_norm = 0.0;  // ||C(x1)||_2
};

PointSpectra point_spectra(const ReducedProblem& p, const Vec& x1, double mult_tol = kDefaultMultTol);

/// point_spectra over every sample of the region, in sample order.
std::vector<PointSpectra> scan_region(const ReducedProblem& p, const Region& region, double mult_tol = kDefaultMultTol,
                                      Exec exec = Exec::Parallel);

/// Suprema/infima of a region scan.
struct RegionSpectra {
  double beta_f = 0.0;         // sup sigma_max_full
  double beta_F_riem = 0.0;    // sup riem_sigma
  double beta_F_eucl = 0.0;    // sup eucl_sigma
  double epsilon = 1.0;        // inf epsilon
  int multiplicity = 0;        // p at the center
  double delta_max = 0.0;      // inf gap
  double curvature_gap = 0.0;  // inf (sigma_max_full - gauss_riem_sigma)
  double m_phi = 0.0;          // inf lambda_min(R)
  double M_phi = 0.0;          // sup lambda_max(R)
  double q = 0.0;              // sup
  double z = 0.0;              // sup
  double correction_norm = 0.0;
  std::size_t samples = 0;
};

RegionSpectra reduce_region(const std::vector<PointSpectra>& pts);
RegionSpectra region_spectra(const ReducedProblem& p, const Region& region, double mult_tol = kDefaultMultTol,
                             Exec exec = Exec::Parallel);

double smoothness_riemannian(const ReducedProblem& p, const Region& region, Exec exec = Exec::Parallel);
double smoothness_euclidean(const ReducedProblem& p, const Region& region, Exec exec = Exec::Parallel);

struct Nontangency {
  double epsilon;
  int multiplicity;
};

/// Non-tangency of the dominant curvature subspace of hess f(Phi(x1)) with
/// the tangent space col(DPhi).
Nontangency nontangency_epsilon(const ReducedProblem& p, const Vec& x1, double mult_tol = kDefaultMultTol);

double spectral_gap_max(const ReducedProblem& p, const Region& region, double mult_tol = kDefaultMultTol,
                        Exec exec = Exec::Parallel);

/// beta_F <= beta_f - Delta_max (2 eps - eps^2).
struct AffineBound {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  bool vacuous = false;  // no usable spectral gap; holds is reported true
};

AffineBound affine_bound_from(const RegionSpectra& s, double mult_tol = kDefaultMultTol);
/// Throws Errc::WrongMappingKind unless the mapping is Constant or Affine.
AffineBound check_affine_bound(const ReducedProblem& p, const Region& region, double mult_tol = kDefaultMultTol,
                               Exec exec = Exec::Parallel);

/// beta_F <= beta_f - Delta_max (2 eps - eps^2) + Q Z / m_phi, plus the
/// Euclidean form beta_F^E <= M_phi [beta_f - Delta_max (2 eps - eps^2)] + Q Z.
struct NonlinearBound {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double q = 0.0;
  double z = 0.0;
  double m_phi = 0.0;
  double curvature_gap = 0.0;      // inf over samples of delta
  bool hypothesis_failed = false;  // Q Z / m_phi >= curvature_gap
  bool vacuous = false;
  bool eucl_holds = false;
  double eucl_lhs = 0.0;
  double eucl_rhs = 0.0;
};

NonlinearBound nonlinear_bound_from(const RegionSpectra& s, double mult_tol = kDefaultMultTol);
NonlinearBound check_nonlinear_bound(const ReducedProblem& p, const Region& region,
                                     double mult_tol = kDefaultMultTol, Exec exec = Exec::Parallel);

/// Morse-Bott constants at a minimiser on the feasible manifold.
struct MbConstants {
  double mu_f = 0.0;       // lambda_min of hess f restricted to the normal space of S
  double mu_F = 0.0;       // min eigenvalue of (hess F, R) on R-normal directions of S_F
  double delta_min = 0.0;  // lambda_{m+1} - lambda_min of the restricted Hessian
  double eps_min = 0.0;    // non-tangency of the minimal eigenspace with col(DPhi)
  int multiplicity = 0;
  double bound = 0.0;      // mu_f + delta_min (2 eps - eps^2)
  bool holds = false;      // mu_F >= bound - 1e-8
  bool tangent_contained = false;  // T S lies inside col(DPhi)
  double mu_F_eucl = 0.0;  // same restriction measured in the Euclidean x1 metric
};

/// solution_tangent: n x d basis of the tangent space of the solution set at
/// Phi(minimiser) (d may be 0). Throws Errc::NotCritical when
/// ||grad f|| > 1e-8 and Errc::KernelMismatch when ker hess f differs from
/// span(solution_tangent).
MbConstants mb_constants(const ReducedProblem& p, const Vec& minimiser, const Mat& solution_tangent,
                         double mult_tol = kDefaultMultTol);

/// inf over samples of ||grad f||^2 / (2 (f - c)); with a mapping, of
/// grad F^T R^{-1} grad F / (2 (F - c)). Samples with f - c <= 1e-14 are
/// skipped; Errc::EmptySample when nothing is left.
double pl_constant_estimate(const Objective& obj, const Region& region,
                            const std::optional<ReductionMapping>& mapping = std::nullopt);

/// Pointwise quantities of the correction-term bound for implicit mappings.
struct CorrectionBound {
  double sigma = 0.0;  // lambda_min(hess_uu G)
  double l12 = 0.0;    // ||d3_x1x1u G||
  double l21 = 0.0;    // ||d3_x1uu G||
  double l3 = 0.0;     // ||d3_uuu G||
  double l11 = 0.0;    // ||hess_x1u G||
  double xi = 0.0;     // ||grad_{x2} f|| / ||grad f||
  double l_f = 0.0;    // ||grad f||
  double l_tilde = 0.0;            // sigma l12 + l21 l11 + l3 l11^2 / sigma
  double l_tilde_corrected = 0.0;  // same with 2 l21 l11: both mixed IFT terms counted
  double d2psi_norm = 0.0;   // injective-norm bound of D2Psi (exact when n2 == 1)
  double c_norm = 0.0;       // ||C||
  double cos_theta = 1.0;
  double bound = 0.0;        // l_tilde / sigma^2 * xi * l_f
  double refined_bound = 0.0;
  double corrected_bound = 0.0;  // l_tilde_corrected / sigma^2 * xi * l_f
  bool holds = false;
  bool refined_holds = false;
  bool d2psi_holds = false;  // d2psi_norm <= l_tilde / sigma^2
  bool corrected_holds = false;
};

/// Throws Errc::WrongMappingKind unless the mapping is implicit-argmin.
CorrectionBound correction_bound(const ReducedProblem& p, const Vec& x1, double mult_tol = kDefaultMultTol);

struct SpectralReport {
  double beta_f = 0.0;
  double beta_F_riem = 0.0;
  double beta_F_eucl = 0.0;
  double epsilon = 0.0;
  int multiplicity_p = 0;
  double delta_max = 0.0;
  std::optional<double> delta_min;
  std::optional<double> mu_f;
  std::optional<double> mu_F;
  std::optional<double> kappa_f;
  std::optional<double> kappa_F;
  double M_phi = 0.0;
  double m_phi = 0.0;
  double Q = 0.0;
  double Z = 0.0;
  double correction_norm = 0.0;
  std::optional<bool> bound_affine_holds;
  bool bound_nonlinear_holds = false;
  std::optional<bool> bound_mb_holds;
  bool star_condition_holds = false;
  // flags
  bool nonlinear_hypothesis_failed = false;
  bool gap_vacuous = false;
};

/// Field names of the serialized report, in order.
const std::vector<std::string>& spectral_report_fields();

/// Assembles every report field. MB-derived fields stay empty when no
/// minimiser is given.
SpectralReport condition_report(const ReducedProblem& p, const Region& region, const std::optional<Vec>& minimiser,
                                const Mat& solution_tangent, double mult_tol = kDefaultMultTol,
                                Exec exec = Exec::Parallel);

nlohmann::ordered_json to_json(const SpectralReport& r);

}  // namespace redmap
