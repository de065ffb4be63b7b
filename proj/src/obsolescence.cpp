#include "usemetrics/obsolescence.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "usemetrics/io_utils.hpp"
#include "usemetrics/rng.hpp"

namespace usemetrics {

namespace {

constexpr double kLogParamClamp = 46.0;  // exp(+-46) spans ~1e-20..1e20

bool known_label(char label) {
  return label == 'H' || label == 'I' || label == 'C' || label == 'N' ||
         label == 'S';
}

int label_rank(char label) {
  switch (label) {
    case 'H': return 0;
    case 'I': return 1;
    case 'C': return 2;
    case 'N': return 3;
    default: return 4;  // S
  }
}

double canonical_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

void check_model(const ObsolescenceModel& m) {
  std::set<char> seen;
  for (const ModelComponent& c : m.components) {
    if (!known_label(c.label))
      throw Error(ErrorCode::InvalidConfig,
                  std::string("unknown component label: ") + c.label);
    if (!seen.insert(c.label).second)
      throw Error(ErrorCode::InvalidConfig,
                  std::string("duplicate component label: ") + c.label);
    if (!(std::isfinite(c.amplitude) && c.amplitude >= 0.0))
      throw Error(ErrorCode::InvalidConfig, "amplitude must be finite and >= 0");
    if (!(std::isfinite(c.decay) && c.decay >= 0.0))
      throw Error(ErrorCode::InvalidConfig, "decay must be finite and >= 0");
    if (c.label == 'H' && c.decay != 0.0)
      throw Error(ErrorCode::InvalidConfig, "H component must have decay 0");
  }
}

ObsolescenceModel default_model() {
  ObsolescenceModel m;
  m.components = {
      {'H', 1.5, 0.0},
      {'I', 45.0, 0.065},
      {'C', 110.0, 0.4},
      {'N', 1600.0, 16.0},
  };
  return m;
}

double eval_model(const ObsolescenceModel& m, double t) {
  if (t < 0.0)
    throw Error(ErrorCode::NegativeAge, "age must be non-negative");
  double rate = 0.0;
  for (const ModelComponent& c : m.components) {
    if (c.label == 'S') continue;  // citation-driven; see eval_extended
    rate += c.amplitude * std::exp(-c.decay * t);
  }
  return rate;
}

double CitationHistory::at(double t) const {
  double value = 0.0;
  for (const auto& [age, cumulative] : points) {
    if (age > t) break;
    value = cumulative;
  }
  return value;
}

double eval_extended(const ObsolescenceModel& m, const CitationHistory& history,
                     double t) {
  if (!m.s0.has_value())
    throw Error(ErrorCode::MissingS0,
                "S term requested without an s0 proportionality");
  for (std::size_t i = 0; i < history.points.size(); ++i) {
    if (history.points[i].second < 0.0 ||
        (i > 0 && (history.points[i].first <= history.points[i - 1].first ||
                   history.points[i].second < history.points[i - 1].second)))
      throw Error(ErrorCode::DegenerateInput,
                  "citation history must be non-decreasing over increasing ages");
  }
  return eval_model(m, t) + *m.s0 * history.at(t);
}

double citation_rate_model(const ObsolescenceModel& m,
                           const CitationModelParams& p, double t) {
  if (t < 0.0)
    throw Error(ErrorCode::NegativeAge, "age must be non-negative");
  if (!(p.c >= 0.0) || !(p.k_d > 0.0))
    throw Error(ErrorCode::NonPositiveInput,
                "citation model needs c >= 0 and k_d > 0");
  const ModelComponent* comp_c = nullptr;
  const ModelComponent* comp_i = nullptr;
  for (const ModelComponent& c : m.components) {
    if (c.label == 'C') comp_c = &c;
    if (c.label == 'I') comp_i = &c;
  }
  if (comp_c == nullptr || comp_i == nullptr)
    throw Error(ErrorCode::MissingComponent,
                "citation rate model needs both C and I components");
  double usage = comp_c->amplitude * std::exp(-comp_c->decay * t) +
                 comp_i->amplitude * std::exp(-comp_i->decay * t);
  return p.c * usage * (1.0 - std::exp(-p.k_d * t));
}

AgeingCurve bin_usage_by_age(const std::vector<UsageEvent>& events,
                             const std::map<std::string, Resource>& resources,
                             double bin_width_years, std::int64_t window_start,
                             std::int64_t window_end) {
  if (window_start >= window_end)
    throw Error(ErrorCode::EmptyDateRange, "analysis window is empty");
  if (!(bin_width_years > 0.0))
    throw Error(ErrorCode::InvalidConfig, "bin width must be positive");

  std::int64_t mid = window_start + (window_end - window_start) / 2;
  double window_years = years_between(window_start, window_end);

  // Bin index per resource, measured at the window midpoint. Resources not
  // yet published at the midpoint stay unbinned and their events ignored.
  std::map<std::string, long> bin_of;
  std::map<long, std::pair<long, long>> bins;  // idx -> (articles, events)
  for (const auto& [id, res] : resources) {
    double age = years_between(res.publication_date, mid);
    if (age < 0.0) continue;
    long idx = static_cast<long>(std::floor(age / bin_width_years));
    bin_of[id] = idx;
    bins[idx].first += 1;
  }
  for (const UsageEvent& e : events) {
    if (e.timestamp < window_start || e.timestamp >= window_end) continue;
    auto rit = resources.find(e.resource_id);
    if (rit == resources.end())
      throw Error(ErrorCode::MissingPublicationDate,
                  "no publication date for resource " + e.resource_id);
    auto bit = bin_of.find(e.resource_id);
    if (bit == bin_of.end()) continue;  // published after the midpoint
    bins[bit->second].second += 1;
  }

  AgeingCurve curve;
  for (const auto& [idx, counts] : bins) {
    AgeBin bin;
    bin.age_midpoint = (static_cast<double>(idx) + 0.5) * bin_width_years;
    bin.article_count = counts.first;
    bin.rate = static_cast<double>(counts.second) /
               static_cast<double>(counts.first) / window_years;
    curve.bins.push_back(bin);
  }
  return curve;
}

std::string ageing_curve_csv(const AgeingCurve& curve) {
  std::ostringstream out;
  out << "age,rate,article_count\n";
  for (const AgeBin& bin : curve.bins)
    out << format_double(bin.age_midpoint) << ',' << format_double(bin.rate)
        << ',' << bin.article_count << '\n';
  return out.str();
}

AgeingCurve parse_ageing_curve(const std::string& csv) {
  AgeingCurve curve;
  std::istringstream in(csv);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields = csv_split(line);
    if (fields.size() != 3)
      throw Error(ErrorCode::ColumnMismatch,
                  "ageing curve rows need age,rate,article_count");
    AgeBin bin;
    try {
      bin.age_midpoint = std::stod(fields[0]);
      bin.rate = std::stod(fields[1]);
      bin.article_count = std::stol(fields[2]);
    } catch (...) {
      throw Error(ErrorCode::MalformedLine,
                  "non-numeric ageing curve row: " + line);
    }
    curve.bins.push_back(bin);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct FitProblem {
  std::vector<double> t;
  std::vector<double> log_rate;
  std::vector<double> weight;  // article counts
  int n_exp = 0;
  bool with_const = false;

  int npar() const { return 2 * n_exp + (with_const ? 1 : 0); }

  // theta holds log-amplitudes and log-decays: [a1,d1,...,a_ne,d_ne,(h)].
  void eval(const Eigen::VectorXd& theta, Eigen::VectorXd& r,
            Eigen::MatrixXd* jac) const {
    std::size_t nb = t.size();
    r.resize(static_cast<Eigen::Index>(nb));
    if (jac != nullptr)
      jac->resize(static_cast<Eigen::Index>(nb), npar());
    for (std::size_t b = 0; b < nb; ++b) {
      double f = 0.0;
      for (int k = 0; k < n_exp; ++k) {
        double amp = std::exp(theta[2 * k]);
        double dec = std::exp(theta[2 * k + 1]);
        f += amp * std::exp(-dec * t[b]);
      }
      double h = with_const ? std::exp(theta[npar() - 1]) : 0.0;
      f += h;
      double sw = std::sqrt(weight[b]);
      r[static_cast<Eigen::Index>(b)] = sw * (std::log(f) - log_rate[b]);
      if (jac != nullptr) {
        for (int k = 0; k < n_exp; ++k) {
          double amp = std::exp(theta[2 * k]);
          double dec = std::exp(theta[2 * k + 1]);
          double term = amp * std::exp(-dec * t[b]);
          (*jac)(static_cast<Eigen::Index>(b), 2 * k) = sw * term / f;
          (*jac)(static_cast<Eigen::Index>(b), 2 * k + 1) =
              sw * (-term * dec * t[b]) / f;
        }
        if (with_const)
          (*jac)(static_cast<Eigen::Index>(b), npar() - 1) = sw * h / f;
      }
    }
  }
};

struct StartResult {
  double cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta;
  int iterations = 0;
  bool converged = false;
};

StartResult levenberg_marquardt(const FitProblem& problem,
                                Eigen::VectorXd theta,
                                const FitOptions& options) {
  StartResult result;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  problem.eval(theta, r, &jac);
  double cost = 0.5 * r.squaredNorm();
  double mu = 1e-3;
  int iter = 0;
  bool converged = false;
  while (iter < options.max_iterations) {
    ++iter;
    Eigen::VectorXd g = jac.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd h = jac.transpose() * jac;
    Eigen::MatrixXd damped = h;
    for (int i = 0; i < damped.rows(); ++i)
      damped(i, i) += mu * (h(i, i) + 1e-12);
    Eigen::VectorXd delta = damped.ldlt().solve(-g);
    if (!delta.allFinite()) {
      mu *= 10.0;
      if (mu > 1e14) break;  // numerical breakdown, not convergence
      continue;
    }
    Eigen::VectorXd candidate = theta + delta;
    for (int i = 0; i < candidate.size(); ++i)
      candidate[i] =
          std::clamp(candidate[i], -kLogParamClamp, kLogParamClamp);
    Eigen::VectorXd r_new;
    problem.eval(candidate, r_new, nullptr);
    double cost_new = 0.5 * r_new.squaredNorm();
    if (cost_new < cost) {
      bool tiny_step =
          (candidate - theta).lpNorm<Eigen::Infinity>() < options.step_tol;
      bool tiny_improvement =
          cost - cost_new <= options.cost_tol * cost_new;
      theta = candidate;
      problem.eval(theta, r, &jac);
      cost = cost_new;
      mu = std::max(mu / 3.0, 1e-14);
      if (tiny_step || tiny_improvement) {
        converged = true;
        break;
      }
    } else {
      mu *= 4.0;
      if (mu > 1e14) {
        // Damping has grown past any useful step size: no direction
        // decreases the cost any further. That is a terminal state of the
        // descent, not an exhausted budget.
        converged = true;
        break;
      }
    }
  }
  result.cost = cost;
  result.theta = theta;
  result.iterations = iter;
  result.converged = converged;
  return result;
}

// Weighted linear least squares for amplitudes given fixed decays; a cheap
// start-point heuristic, clamped positive.
Eigen::VectorXd init_amplitudes(const FitProblem& problem,
                                const std::vector<double>& decays) {
  std::size_t nb = problem.t.size();
  int cols = problem.n_exp + (problem.with_const ? 1 : 0);
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(nb), cols);
  Eigen::VectorXd y(static_cast<Eigen::Index>(nb));
  double y_max = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    double rate = std::exp(problem.log_rate[b]);
    y_max = std::max(y_max, rate);
    double sw = std::sqrt(problem.weight[b]);
    for (int k = 0; k < problem.n_exp; ++k)
      phi(static_cast<Eigen::Index>(b), k) =
          sw * std::exp(-decays[static_cast<std::size_t>(k)] * problem.t[b]);
    if (problem.with_const)
      phi(static_cast<Eigen::Index>(b), cols - 1) = sw;
    y[static_cast<Eigen::Index>(b)] = sw * rate;
  }
  Eigen::MatrixXd normal = phi.transpose() * phi;
  for (int i = 0; i < cols; ++i) normal(i, i) += 1e-9;
  Eigen::VectorXd amps = normal.ldlt().solve(phi.transpose() * y);
  double floor = std::max(y_max * 1e-6, 1e-9);
  for (int i = 0; i < cols; ++i)
    if (!(amps[i] > floor)) amps[i] = floor;
  return amps;
}

}  // namespace

std::pair<ObsolescenceModel, FitDiagnostics> fit_obsolescence(
    const AgeingCurve& curve, int n_exponentials, bool include_constant,
    const std::optional<ObsolescenceModel>& init, const FitOptions& options) {
  if (n_exponentials != 2 && n_exponentials != 3)
    throw Error(ErrorCode::InvalidConfig,
                "n_exponentials must be 2 or 3");

  FitProblem problem;
  problem.n_exp = n_exponentials;
  problem.with_const = include_constant;
  for (const AgeBin& bin : curve.bins) {
    if (!(bin.rate > 0.0) || bin.article_count <= 0) continue;
    problem.t.push_back(bin.age_midpoint);
    problem.log_rate.push_back(std::log(bin.rate));
    problem.weight.push_back(static_cast<double>(bin.article_count));
  }
  if (static_cast<int>(problem.t.size()) <= 2 * problem.npar())
    throw Error(ErrorCode::InsufficientData,
                "need more than " + std::to_string(2 * problem.npar()) +
                    " usable bins, have " + std::to_string(problem.t.size()));

  std::vector<double> ladder =
      n_exponentials == 3 ? std::vector<double>{16.0, 0.4, 0.065}
                          : std::vector<double>{0.4, 0.065};

  int starts = std::max(1, options.starts);
  StartResult best;
  std::vector<double> best_flat;
  int chosen = -1;
  for (int s = 0; s < starts; ++s) {
    std::vector<double> decays = ladder;
    Eigen::VectorXd theta(problem.npar());
    bool seeded_from_init = false;
    if (s == 0 && init.has_value()) {
      std::vector<ModelComponent> exps;
      std::optional<double> h0;
      for (const ModelComponent& c : init->components) {
        if (c.label == 'H')
          h0 = c.amplitude;
        else if (c.label != 'S')
          exps.push_back(c);
      }
      if (static_cast<int>(exps.size()) == n_exponentials) {
        std::sort(exps.begin(), exps.end(),
                  [](const ModelComponent& a, const ModelComponent& b) {
                    return a.decay > b.decay;
                  });
        for (int k = 0; k < n_exponentials; ++k) {
          theta[2 * k] =
              std::log(std::max(exps[static_cast<std::size_t>(k)].amplitude,
                                1e-9));
          theta[2 * k + 1] = std::log(
              std::max(exps[static_cast<std::size_t>(k)].decay, 1e-9));
        }
        if (include_constant)
          theta[problem.npar() - 1] =
              std::log(std::max(h0.value_or(1.0), 1e-9));
        seeded_from_init = true;
      }
    }
    if (!seeded_from_init) {
      std::mt19937_64 rng(
          derive_seed(options.seed, "fit_start_" + std::to_string(s)));
      for (std::size_t k = 0; k < decays.size(); ++k) {
        double factor =
            s == 0 ? 1.0 : 0.25 + canonical_uniform(rng) * 3.75;
        decays[k] *= factor;
      }
      Eigen::VectorXd amps = init_amplitudes(problem, decays);
      for (int k = 0; k < n_exponentials; ++k) {
        theta[2 * k] = std::log(amps[k]);
        theta[2 * k + 1] = std::log(decays[static_cast<std::size_t>(k)]);
      }
      if (include_constant)
        theta[problem.npar() - 1] = std::log(amps[n_exponentials]);
    }

    StartResult candidate = levenberg_marquardt(problem, theta, options);

    // Canonical flattening (decays descending) for deterministic ties.
    std::vector<std::pair<double, double>> exps;
    for (int k = 0; k < n_exponentials; ++k)
      exps.emplace_back(std::exp(candidate.theta[2 * k + 1]),
                        std::exp(candidate.theta[2 * k]));
    std::sort(exps.begin(), exps.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> flat;
    for (const auto& [dec, amp] : exps) {
      flat.push_back(amp);
      flat.push_back(dec);
    }
    if (include_constant)
      flat.push_back(std::exp(candidate.theta[problem.npar() - 1]));

    bool better = candidate.cost < best.cost ||
                  (candidate.cost == best.cost && chosen >= 0 &&
                   flat < best_flat);
    if (chosen < 0 || better) {
      best = candidate;
      best_flat = flat;
      chosen = s;
    }
  }

  // Assemble the model: exponentials sorted by decay descending take labels
  // N, C, I (or C, I for two exponentials); the constant is H. Stored in
  // canonical H, I, C, N order.
  std::vector<std::pair<double, double>> exps;  // (decay, amplitude)
  for (int k = 0; k < n_exponentials; ++k)
    exps.emplace_back(std::exp(best.theta[2 * k + 1]),
                      std::exp(best.theta[2 * k]));
  std::sort(exps.begin(), exps.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<char> labels = n_exponentials == 3
                                 ? std::vector<char>{'N', 'C', 'I'}
                                 : std::vector<char>{'C', 'I'};
  ObsolescenceModel model;
  if (include_constant)
    model.components.push_back(
        {'H', std::exp(best.theta[problem.npar() - 1]), 0.0});
  for (std::size_t k = exps.size(); k-- > 0;)
    model.components.push_back({labels[k], exps[k].second, exps[k].first});
  std::sort(model.components.begin(), model.components.end(),
            [](const ModelComponent& a, const ModelComponent& b) {
              return label_rank(a.label) < label_rank(b.label);
            });

  FitDiagnostics diag;
  diag.residual_norm = std::sqrt(2.0 * best.cost);
  diag.iterations = best.iterations;
  diag.converged = best.converged;
  diag.starts = starts;
  return {model, diag};
}

double fit_objective(const AgeingCurve& curve, const ObsolescenceModel& m) {
  double cost = 0.0;
  for (const AgeBin& bin : curve.bins) {
    if (!(bin.rate > 0.0) || bin.article_count <= 0) continue;
    double f = eval_model(m, bin.age_midpoint);
    double d = std::log(f) - std::log(bin.rate);
    cost += 0.5 * static_cast<double>(bin.article_count) * d * d;
  }
  return cost;
}

std::vector<double> fit_objective_gradient(const AgeingCurve& curve,
                                           const ObsolescenceModel& m) {
  // Natural parameters in component order: (amplitude, decay) per
  // exponential component, amplitude only for H; S carries none.
  std::vector<double> grad;
  for (const ModelComponent& c : m.components) {
    if (c.label == 'S') continue;
    grad.push_back(0.0);
    if (c.label != 'H') grad.push_back(0.0);
  }
  for (const AgeBin& bin : curve.bins) {
    if (!(bin.rate > 0.0) || bin.article_count <= 0) continue;
    double t = bin.age_midpoint;
    double f = eval_model(m, t);
    double common = static_cast<double>(bin.article_count) *
                    (std::log(f) - std::log(bin.rate)) / f;
    std::size_t p = 0;
    for (const ModelComponent& c : m.components) {
      if (c.label == 'S') continue;
      double e = std::exp(-c.decay * t);
      grad[p++] += common * e;  // d f / d amplitude
      if (c.label != 'H')
        grad[p++] += common * (-c.amplitude * t * e);  // d f / d decay
    }
  }
  return grad;
}

}  // namespace usemetrics
