// Acceptance suite: one pass/fail line per criterion, exit code equal to
// the number of failures. Runs single-threaded (SPENC_THREADS=1).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spenc/spenc.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using spenc::CountMatrix;
using spenc::FitResult;
using spenc::LinkKind;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass,
            const std::string& detail, double seconds) {
  std::printf("%s criterion %d: %s (%s) [%.1fs]\n", pass ? "PASS" : "FAIL",
              id, name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

struct Timer {
  Clock::time_point t0 = Clock::now();
  double secs() const {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }
};

FitResult run_fit(const CountMatrix& Y, LinkKind link, std::uint64_t seed) {
  spenc::ModelConfig mcfg;
  mcfg.factors = 3;
  mcfg.link = link;
  spenc::TrainConfig tcfg;  // lr 0.05, 100 epochs, batch 1024, 4 MC draws
  tcfg.seed = seed;
  return spenc::fit(Y, mcfg, tcfg);
}

// Violations against the known structured set: misassigned items plus
// background noise items whose posterior mean background rate leaves
// [0.8, 1.2].
struct SeparationCheck {
  long misassigned = 0;
  long phi_out = 0;
  double phi_min = 1e30, phi_max = -1e30;
};

SeparationCheck check_separation(const FitResult& fit,
                                 const std::vector<long>& structured) {
  SeparationCheck out;
  const auto part = spenc::feature_partition(fit, 0.5);
  const std::set<long> truth(structured.begin(), structured.end());
  const std::set<long> factors(part.factor_items.begin(),
                               part.factor_items.end());
  for (long i : factors) {
    if (!truth.count(i)) ++out.misassigned;
  }
  for (long i : truth) {
    if (!factors.count(i)) ++out.misassigned;
  }
  for (long i : part.background_items) {
    if (truth.count(i)) continue;  // misassigned structured item
    const double phi = fit.phi_mean[i];
    out.phi_min = std::min(out.phi_min, phi);
    out.phi_max = std::max(out.phi_max, phi);
    if (phi < 0.8 || phi > 1.2) ++out.phi_out;
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// 1. All-noise data: every item lands in the background with rates near 1,
// inside the single-threaded runtime target.
static void criterion1(const FitResult& noise_fit, double fit_seconds) {
  const auto part = spenc::feature_partition(noise_fit, 0.5);
  const double phi_min = noise_fit.phi_mean.minCoeff();
  const double phi_max = noise_fit.phi_mean.maxCoeff();
  const bool pass = part.factor_items.empty() && phi_min >= 0.8 &&
                    phi_max <= 1.2 && fit_seconds < 600.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%zu factor items; phi in [%.3f, %.3f]; fit %.1fs < 600s",
                part.factor_items.size(), phi_min, phi_max, fit_seconds);
  report(1, "noise separation", pass, buf, fit_seconds);
}

// 2 / 3. Structured datasets: exact recovery with at most one violation
// across three seeds.
static long separation_violations(
    const std::vector<std::pair<FitResult, std::vector<long>>>& fits,
    std::string* detail) {
  long total = 0;
  std::ostringstream ss;
  for (const auto& [fit, structured] : fits) {
    const auto chk = check_separation(fit, structured);
    total += chk.misassigned + chk.phi_out;
    ss << "[mis=" << chk.misassigned << " phi=(" << chk.phi_min << ","
       << chk.phi_max << ")] ";
  }
  *detail = ss.str();
  return total;
}

int main() {
  setenv("SPENC_THREADS", "1", 1);
  const fs::path work = fs::temp_directory_path() / "spenc_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const long U = 5000, I = 30;

  // Shared datasets and fits.
  Timer t_noise;
  const auto noise = spenc::gen_poisson_noise(U, I, 1.0, 301);
  const FitResult noise_id = run_fit(noise.counts, LinkKind::identity_scaled, 11);
  const double noise_fit_secs = t_noise.secs();

  criterion1(noise_id, noise_fit_secs);

  // Criterion 2: linear recovery across three seeds.
  std::vector<std::pair<FitResult, std::vector<long>>> linear_fits;
  {
    Timer t;
    const std::uint64_t data_seeds[3] = {302, 312, 322};
    const std::uint64_t fit_seeds[3] = {11, 12, 13};
    for (int s = 0; s < 3; ++s) {
      const auto data = spenc::gen_linear_factor(U, I, data_seeds[s]);
      linear_fits.emplace_back(
          run_fit(data.counts, LinkKind::identity_scaled, fit_seeds[s]),
          data.truth.structured_items);
    }
    std::string detail;
    const long violations = separation_violations(linear_fits, &detail);
    report(2, "linear structure recovery", violations <= 1,
           detail + "total=" + std::to_string(violations), t.secs());
  }

  // Criterion 3: nonlinear recovery, identity and log links.
  std::vector<std::pair<FitResult, std::vector<long>>> nonlin_id, nonlin_log;
  {
    Timer t;
    const std::uint64_t data_seeds[3] = {303, 313, 323};
    const std::uint64_t id_seeds[3] = {11, 12, 13};
    const std::uint64_t log_seeds[3] = {15, 16, 17};
    bool pass = true;
    std::string full_detail;
    for (int s = 0; s < 3; ++s) {
      const auto data = spenc::gen_nonlinear_factor(U, I, data_seeds[s]);
      nonlin_id.emplace_back(
          run_fit(data.counts, LinkKind::identity_scaled, id_seeds[s]),
          data.truth.structured_items);
      nonlin_log.emplace_back(
          run_fit(data.counts, LinkKind::log_link, log_seeds[s]),
          data.truth.structured_items);
    }
    std::string d1, d2;
    const long v1 = separation_violations(nonlin_id, &d1);
    const long v2 = separation_violations(nonlin_log, &d2);
    pass = v1 <= 1 && v2 <= 1;
    full_detail = "identity: " + d1 + "total=" + std::to_string(v1) +
                  " | log: " + d2 + "total=" + std::to_string(v2);
    report(3, "nonlinear robustness (both links)", pass, full_detail,
           t.secs());
  }

  // Criterion 4: WAIC link insensitivity on all three datasets.
  {
    Timer t;
    const auto linear_data = spenc::gen_linear_factor(U, I, 302);
    const auto nonlin_data = spenc::gen_nonlinear_factor(U, I, 303);
    const FitResult noise_log =
        run_fit(noise.counts, LinkKind::log_link, 15);
    const FitResult linear_log =
        run_fit(linear_data.counts, LinkKind::log_link, 15);
    struct Row {
      const char* name;
      const CountMatrix* Y;
      const FitResult* ident;
      const FitResult* logl;
    };
    const Row rows[3] = {
        {"noise", &noise.counts, &noise_id, &noise_log},
        {"linear", &linear_data.counts, &linear_fits[0].first, &linear_log},
        {"nonlinear", &nonlin_data.counts, &nonlin_id[0].first,
         &nonlin_log[0].first}};
    bool pass = true;
    std::ostringstream ss;
    for (const auto& row : rows) {
      const auto wi = spenc::waic(*row.ident, *row.Y, 200,
                                  spenc::WaicUnit::entry);
      const auto wl = spenc::waic(*row.logl, *row.Y, 200,
                                  spenc::WaicUnit::entry);
      const double gap = std::abs(wi.waic - wl.waic);
      const double bound = 2.0 * std::sqrt(wi.se * wi.se + wl.se * wl.se);
      pass = pass && gap <= bound;
      ss << row.name << ": |" << static_cast<long>(wi.waic) << "-"
         << static_cast<long>(wl.waic) << "|=" << static_cast<long>(gap)
         << "<=" << static_cast<long>(bound) << " ";
    }
    report(4, "WAIC link insensitivity", pass, ss.str(), t.secs());
  }

  // Criterion 5: pathwise gradients vs central finite differences on 20
  // random small instances.
  {
    Timer t;
    spenc::CounterRng dims_rng(4242, 0);
    long checked = 0, bad = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 20; ++inst) {
      const long Ui = 2 + static_cast<long>(dims_rng.next_below(4));  // 2..5
      const long Ii = 3 + static_cast<long>(dims_rng.next_below(4));  // 3..6
      const long Ki =
          1 + static_cast<long>(dims_rng.next_below(
                  static_cast<std::uint64_t>(std::min(3L, Ii))));
      const LinkKind kind = inst % 2 == 0 ? LinkKind::identity_scaled
                                          : LinkKind::log_link;
      CountMatrix Y(Ui, Ii);
      for (long r = 0; r < Ui; ++r) {
        for (long c = 0; c < Ii; ++c) {
          const long v = dims_rng.poisson(1.2);
          if (v > 0) Y.add(r, c, v);
        }
      }
      Y.compress();
      spenc::TrainConfig tcfg;
      tcfg.seed = 1000 + inst;
      auto state = spenc::init_state(Ui, Ii, Ki, tcfg, tcfg.seed);
      for (long j = 0; j < state.layout().dim(); ++j) {
        state.loc[j] += 0.5 * dims_rng.normal();
        state.raw_scale[j] += 0.5 * dims_rng.normal();
      }
      const VectorXd eta = spenc::compute_item_means(Y).eta;
      spenc::ModelConfig mcfg;
      mcfg.factors = Ki;
      mcfg.link = kind;
      spenc::ElboContext ctx{&Y, spenc::LinkPair{kind, eta},
                             VectorXd::Ones(Ui),
                             spenc::Priors::resolve(mcfg, Ui, Ii), Ui,
                             tcfg.theta_scale};
      std::vector<long> rows(static_cast<std::size_t>(Ui));
      std::iota(rows.begin(), rows.end(), 0L);
      const std::uint64_t noise_seed = 77 + inst;
      const auto est =
          spenc::elbo_estimate(state, ctx, rows, 2, noise_seed, 0);
      auto value_at = [&](const VectorXd& loc, const VectorXd& rs) {
        auto s = state;
        s.loc = loc;
        s.raw_scale = rs;
        return spenc::elbo_estimate(s, ctx, rows, 2, noise_seed, 0).elbo;
      };
      for (long j = 0; j < state.layout().dim(); ++j) {
        for (int which = 0; which < 2; ++which) {
          VectorXd loc = state.loc;
          VectorXd rs = state.raw_scale;
          double* x = which == 0 ? &loc[j] : &rs[j];
          const double h = 1e-4 * std::max(1.0, std::abs(*x));
          const double x0 = *x;
          *x = x0 + h;
          const double up = value_at(loc, rs);
          *x = x0 - h;
          const double dn = value_at(loc, rs);
          const double fd = (up - dn) / (2.0 * h);
          const double an =
              which == 0 ? est.grad_loc[j] : est.grad_raw_scale[j];
          ++checked;
          double err;
          if (std::abs(an) < 1e-6) {
            err = std::abs(fd - an) <= 1e-6 ? 0.0 : std::abs(fd - an);
            if (err > 0) ++bad;
          } else {
            err = std::abs(fd - an) / std::abs(an);
            if (err >= 1e-3) ++bad;
          }
          worst = std::max(worst, err);
        }
      }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%ld coordinates, %ld failures, worst rel err %.2e",
                  checked, bad, worst);
    report(5, "gradient oracle", bad == 0, buf, t.secs());
  }

  // Criterion 6: auxiliary inverse-Gamma pair integrates to the
  // half-Cauchy density.
  {
    Timer t;
    bool pass = true;
    double worst = 0.0;
    for (double x : {0.5, 1.0, 2.0}) {
      const double numeric = oracles::halfcauchy_via_aux_pair(x, 1.0);
      const double exact = oracles::half_cauchy_pdf(x, 1.0);
      const double err = std::abs(numeric - exact);
      worst = std::max(worst, err);
      pass = pass && err < 1e-4;
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "max abs error %.2e", worst);
    report(6, "horseshoe marginal oracle", pass, buf, t.secs());
  }

  // Criterion 7: rule inversion is exact at support threshold zero.
  {
    Timer t;
    bool pass = true;
    long tested_rows = 0;
    for (LinkKind kind : {LinkKind::identity_scaled, LinkKind::log_link}) {
      const auto train = spenc::gen_linear_factor(200, 10, 901);
      spenc::ModelConfig mcfg;
      mcfg.factors = 2;
      mcfg.link = kind;
      spenc::TrainConfig tcfg;
      tcfg.epochs = 10;
      tcfg.batch_size = 200;
      tcfg.seed = 31;
      const FitResult fit = spenc::fit(train.counts, mcfg, tcfg);
      const auto probe = spenc::gen_poisson_noise(1000, 10, 1.3, 902);
      const MatrixXd theta =
          spenc::transform_new(fit, probe.counts, spenc::XiMode::unit);
      const auto strat = spenc::stratify(fit, theta, 0,
                                         {1.0 / 3.0, 2.0 / 3.0}, 1.0, 0.0);
      for (long r = 0; r < probe.counts.rows(); ++r) {
        const long direct =
            spenc::stratum_of(strat.thresholds, theta(r, 0));
        long via = -1;
        int hits = 0;
        for (std::size_t j = 0; j < strat.rules.size(); ++j) {
          if (strat.rules[j].contains(probe.counts, r, 1.0)) {
            via = static_cast<long>(j);
            ++hits;
          }
        }
        pass = pass && hits == 1 && via == direct;
        ++tested_rows;
      }
    }
    report(7, "rule-inversion exactness",
           pass, std::to_string(tested_rows) + " rows, both links",
           t.secs());
  }

  // Criterion 8: byte-identical artifacts under a fixed seed.
  {
    Timer t;
    bool pass = true;
    std::string detail;
    for (auto kind : {spenc::SyntheticKind::noise,
                      spenc::SyntheticKind::linear}) {
      spenc::SimulateOptions opt;
      opt.kind = kind;
      opt.rows = 400;
      opt.cols = 30;
      opt.seed = 777;
      opt.out_dir = (work / ("sim_a_" + spenc::kind_name(kind))).string();
      spenc::cmd_simulate(opt);
      const std::string dir_a = opt.out_dir;
      opt.out_dir = (work / ("sim_b_" + spenc::kind_name(kind))).string();
      spenc::cmd_simulate(opt);
      for (const char* f : {"Y.mtx", "truth.json"}) {
        if (slurp(fs::path(dir_a) / f) != slurp(fs::path(opt.out_dir) / f)) {
          pass = false;
          detail += std::string("simulate mismatch on ") + f + "; ";
        }
      }
    }
    spenc::FitOptions fopt;
    fopt.data_path = (work / "sim_a_noise" / "Y.mtx").string();
    fopt.model.factors = 2;
    fopt.train.epochs = 5;
    fopt.train.batch_size = 128;
    fopt.train.seed = 5;
    fopt.out_dir = (work / "fit_a").string();
    spenc::cmd_fit(fopt);
    fopt.out_dir = (work / "fit_b").string();
    spenc::cmd_fit(fopt);
    for (const char* f : {"fit.json", "alpha.csv", "alpha_sd.csv", "beta.csv",
                          "phi.csv", "elbo.csv", "alpha.ppm", "beta.ppm"}) {
      if (slurp(work / "fit_a" / f) != slurp(work / "fit_b" / f)) {
        pass = false;
        detail += std::string("fit mismatch on ") + f + "; ";
      }
    }
    if (detail.empty()) detail = "simulate + fit artifacts identical";
    report(8, "determinism", pass, detail, t.secs());
  }

  // Criterion 9: sample-size sweep on the nonlinear dataset.
  {
    Timer t;
    bool pass = true;
    std::ostringstream ss;
    for (long sweep_u : {500L, 5000L, 50000L}) {
      const auto data = spenc::gen_nonlinear_factor(sweep_u, I, 303);
      const FitResult fit =
          sweep_u == 5000
              ? nonlin_id[0].first
              : run_fit(data.counts, LinkKind::identity_scaled, 11);
      const auto chk = check_separation(fit, data.truth.structured_items);
      const long violations = chk.misassigned + chk.phi_out;
      ss << "U=" << sweep_u << ": mis=" << chk.misassigned
         << " phi_out=" << chk.phi_out << "; ";
      if (sweep_u >= 5000) pass = pass && violations <= 1;
    }
    report(9, "sample-size sweep", pass, ss.str(), t.secs());
  }

  std::printf("%d criteria failed\n", g_failures);
  return g_failures;
}
