#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usemetrics/core.hpp"

namespace usemetrics {

// ---------------------------------------------------------------------------
// Models

// One behavioral mode of the obsolescence decomposition. Valid labels are
// H (historical constant, decay 0), I (interesting), C (current),
// N (new), S (student; carried only via s0, see eval_extended).
struct ModelComponent {
  char label = 'H';
  double amplitude = 0.0;  // uses/article/year
  double decay = 0.0;      // per year
};

struct ObsolescenceModel {
  std::vector<ModelComponent> components;
  std::optional<double> s0;  // proportionality of the citation-driven S term
};

// Throws Error(InvalidConfig) when labels repeat, a label is unknown, H has
// nonzero decay, or any amplitude/decay is negative or non-finite.
void check_model(const ObsolescenceModel& m);

// The published fitted parameters: H(1.5, 0), I(45, 0.065), C(110, 0.4),
// N(1600, 16).
ObsolescenceModel default_model();

// Sum of amplitude * exp(-decay * t) over the non-S components.
// Throws Error(NegativeAge) for t < 0.
double eval_model(const ObsolescenceModel& m, double t);

// Cumulative citations per article as a step function of article age.
struct CitationHistory {
  // (age in years, cumulative count), ages strictly increasing, counts
  // non-decreasing. Value before the first breakpoint is 0.
  std::vector<std::pair<double, double>> points;

  double at(double t) const;
};

// eval_model plus s0 * cumulative citations at t.
// Throws Error(MissingS0) when m.s0 is absent.
double eval_extended(const ObsolescenceModel& m, const CitationHistory& history,
                     double t);

struct CitationModelParams {
  double c = 0.0;    // citations per use
  double k_d = 1.0;  // citation latency rate, per year, > 0
  std::optional<double> s0;
};

// c * (R_C(t) + R_I(t)) * (1 - exp(-k_d t)): the citation rate implied by
// current and interesting usage with a saturating latency ramp.
// Throws Error(MissingComponent) when m lacks C or I.
double citation_rate_model(const ObsolescenceModel& m,
                           const CitationModelParams& p, double t);

// ---------------------------------------------------------------------------
// Ageing curves

struct AgeBin {
  double age_midpoint = 0.0;  // years
  double rate = 0.0;          // uses/article/year
  long article_count = 0;
};

struct AgeingCurve {
  std::vector<AgeBin> bins;  // ages strictly increasing
};

// Bins per-article usage rates by article age, measured at the midpoint of
// the analysis window [window_start, window_end). Bins with no articles are
// omitted; bins whose articles received no events appear with rate 0.
// Throws Error(EmptyDateRange) on an empty window and
// Error(MissingPublicationDate) when an event references a resource outside
// the table.
AgeingCurve bin_usage_by_age(const std::vector<UsageEvent>& events,
                             const std::map<std::string, Resource>& resources,
                             double bin_width_years, std::int64_t window_start,
                             std::int64_t window_end);

std::string ageing_curve_csv(const AgeingCurve& curve);
AgeingCurve parse_ageing_curve(const std::string& csv);

// ---------------------------------------------------------------------------
// Fitting

struct FitOptions {
  int starts = 8;
  std::uint64_t seed = 1;
  int max_iterations = 400;  // per start
  double gradient_tol = 1e-12;
  double step_tol = 1e-13;
  // An accepted step improving the cost by less than this relative amount
  // ends the descent.
  double cost_tol = 1e-12;
};

struct FitDiagnostics {
  double residual_norm = 0.0;  // L2 norm of weighted log-space residuals
  int iterations = 0;          // of the selected start
  // True when the selected start terminated because no further progress was
  // possible (small gradient, small step, or damping limit with no
  // accepting step); false only when the iteration budget ran out.
  bool converged = false;
  int starts = 0;
};

// Weighted nonlinear least squares on log-rates (weights = article_count)
// for n_exponentials decaying terms plus an optional constant. Zero-rate
// bins carry no log-rate and are excluded. Multi-start over a decay ladder
// spanning the model's decades; the best start is chosen by residual, then
// lexicographic parameters. Decays are kept positive by construction.
// Non-convergence is reported through the diagnostics flag, not thrown.
// Throws Error(InsufficientData) when usable bins <= 2 * free parameters.
std::pair<ObsolescenceModel, FitDiagnostics> fit_obsolescence(
    const AgeingCurve& curve, int n_exponentials, bool include_constant,
    const std::optional<ObsolescenceModel>& init = std::nullopt,
    const FitOptions& options = {});

// Weighted log-space half-sum-of-squares objective and its analytic
// gradient in natural parameters (exponential amplitude/decay pairs in
// component order, then the H amplitude if present). Exposed so the
// gradient can be verified against finite differences.
double fit_objective(const AgeingCurve& curve, const ObsolescenceModel& m);
std::vector<double> fit_objective_gradient(const AgeingCurve& curve,
                                           const ObsolescenceModel& m);

}  // namespace usemetrics
