#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acceptance/criteria.hpp"
#include "json.hpp"
#include "teichlab/apl.hpp"
#include "teichlab/checks.hpp"
#include "teichlab/errors.hpp"
#include "teichlab/fn_surface.hpp"
#include "teichlab/markoff.hpp"
#include "teichlab/orbit.hpp"

using namespace teichlab;
using json = nlohmann::ordered_json;

namespace {

// exit codes
constexpr int kInvalid = 1, kRuntime = 2, kCheckFailed = 3;

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- parsing

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double number(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + s + "' is not a number");
  }
  if (pos != s.size() || !std::isfinite(v)) throw ConfigError(what + ": '" + s + "' is not a finite number");
  return v;
}

double positive(const std::string& s, const std::string& what) {
  double v = number(s, what);
  if (!(v > 0)) throw ConfigError(what + " must be positive");
  return v;
}

std::vector<double> numbers(const std::string& s, const std::string& what, std::size_t n = 0) {
  std::vector<double> v;
  for (auto& part : split(s, ',')) v.push_back(number(part, what));
  if (v.empty() || (n && v.size() != n)) throw ConfigError(what + ": expected " + (n ? std::to_string(n) : std::string("at least one")) + " comma-separated values");
  return v;
}

/// "123", "1e12" or "2.5e3"; the value must be a positive integer
big_int bound_value(const std::string& s) {
  static const std::regex re(R"(([0-9]+)(?:\.([0-9]*))?(?:[eE]\+?([0-9]+))?)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ConfigError("bound: '" + s + "' is not a positive integer");
  std::string digits = m[1].str() + m[2].str();
  long long exp = (m[3].matched ? std::stoll(m[3].str()) : 0) - (long long)m[2].length();
  if (exp > 4000) throw ConfigError("bound: exponent too large");
  while (exp < 0) {
    if (digits.empty() || digits.back() != '0') throw ConfigError("bound: '" + s + "' is not an integer");
    digits.pop_back();
    ++exp;
  }
  big_int v(digits.empty() ? "0" : digits);
  for (long long i = 0; i < exp; ++i) v *= 10;
  if (v < 1) throw ConfigError("bound must be at least 1");
  return v;
}

/// "lo:hi[:n]" for a log-spaced grid, or a comma list
std::vector<double> radii(const std::string& s) {
  auto parts = split(s, ':');
  if (parts.size() == 2 || parts.size() == 3) {
    double lo = positive(parts[0], "radii"), hi = positive(parts[1], "radii");
    int n = parts.size() == 3 ? int(positive(parts[2], "radii")) : 25;
    return apl::log_radii(lo, hi, n);
  }
  if (parts.size() != 1) throw ConfigError("radii: expected lo:hi[:n] or a comma list");
  auto v = numbers(s, "radii");
  for (double r : v)
    if (!(r > 0)) throw ConfigError("radii must be positive");
  return v;
}

/// comma list of lengths, or "lo:hi:step"
std::vector<double> lengths(const std::string& s) {
  auto parts = split(s, ':');
  std::vector<double> v;
  if (parts.size() == 3) {
    double lo = positive(parts[0], "L"), hi = positive(parts[1], "L"), step = positive(parts[2], "L");
    for (int k = 0; lo + k * step <= hi * (1 + 1e-12); ++k) v.push_back(lo + k * step);
  } else if (parts.size() == 1) {
    v = numbers(s, "L");
  } else {
    throw ConfigError("L: expected a comma list or lo:hi:step");
  }
  for (double L : v)
    if (!(L > 0)) throw ConfigError("L must be positive");
  return v;
}

markoff::Norm norm_value(const std::string& s) {
  if (s == "max") return markoff::Norm::max;
  if (s == "sum") return markoff::Norm::sum;
  throw ConfigError("norm must be max or sum");
}

Word word_value(const std::string& s) {
  try {
    return Word::parse(s);
  } catch (const Error& e) {
    throw ConfigError(std::string("word: ") + e.what());
  }
}

// ---------------------------------------------------------------- output

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
  return out + "\r\n";
}

std::string num17(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

void write_atomic(const std::string& path, const std::string& content) {
  std::filesystem::path tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + tmp.string() + " for writing");
    f << content;
    if (!f) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct Outputs {
  std::string out, csv;
  bool assert_pass = false;

  void json_file(const json& j) const {
    if (!out.empty()) write_atomic(out, j.dump(2) + "\n");
  }
  void csv_file(const std::string& body) const {
    if (!csv.empty()) write_atomic(csv, body);
  }
  void check(bool pass, const std::string& what) const {
    if (assert_pass && !pass) throw CheckFailed(what + " failed");
  }
};

void kv(const std::string& k, const std::string& v) { std::cout << k << "=" << v << "\n"; }

// ---------------------------------------------------------------- shared options

struct Surface {
  std::string x, fn;

  void add(CLI::App* app) {
    auto* ox = app->add_option("--x", x, "Fricke triple tr A,tr B,tr AB");
    auto* of = app->add_option("--fn", fn, "cusped torus in FN coordinates l,tau");
    ox->excludes(of);
  }
  FrickeTriple<double> get() const {
    if (!fn.empty()) {
      auto v = numbers(fn, "fn", 2);
      if (!(v[0] > 0)) throw ConfigError("fn: length must be positive");
      return fn::fricke_triple(SurfacePoint<double>::s11(0.0, v[0], v[1]));
    }
    auto v = numbers(x.empty() ? "3,3,3" : x, "x", 3);
    return {v[0], v[1], v[2]};
  }
};

SurfacePoint<double> base_point(const std::string& s) {
  auto v = numbers(s, "x0", 3);
  if (v[0] < 0 || !(v[1] > 0)) throw ConfigError("x0: need l1 >= 0 and l > 0");
  return SurfacePoint<double>::s11(v[0], v[1], v[2]);
}

CurveOnSurface curve_value(const std::string& word, const std::string& slope) {
  if (!slope.empty()) {
    auto pq = split(slope, '/');
    if (pq.size() != 2) throw ConfigError("slope: expected p/q");
    try {
      return CurveOnSurface::of_slope(std::stoll(pq[0]), std::stoll(pq[1]));
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("slope: ") + e.what());
    } catch (const std::exception&) {
      throw ConfigError("slope: expected integers p/q");
    }
  }
  if (word.empty()) throw ConfigError("one of --word or --slope is required");
  return CurveOnSurface::of_word(word_value(word));
}

json triple_json(const FrickeTriple<double>& X) { return {X.x, X.y, X.z}; }

// ---------------------------------------------------------------- config file

/// key=value lines; '#' starts a comment
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int n = 0;
  auto trim = [](std::string s) {
    auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
    std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (k.empty()) throw ConfigError(path + ":" + std::to_string(n) + ": empty key");
    out.push_back({k, v});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teichlab: experiments on curve counting in Teichmueller space"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Outputs io;
  unsigned workers = 1;
  std::uint64_t seed = 1;
  std::string config;
  auto common = [&](CLI::App* s, bool with_csv = true) {
    s->add_option("--config", config, "key=value file; flags on the command line take precedence");
    s->add_option("--out", io.out, "JSON report path");
    if (with_csv) s->add_option("--csv", io.csv, "CSV path");
    s->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    s->add_flag("--assert", io.assert_pass, "exit 3 when the check fails");
  };

  // markoff-count
  std::string bound_s = "1e2", norm_s = "max", ordering_s = "unordered", checkpoint;
  std::uint64_t every = 1000000;
  auto* mc = app.add_subcommand("markoff-count", "count Markoff triples with norm <= bound");
  common(mc);
  mc->add_option("--bound", bound_s);
  mc->add_option("--norm", norm_s)->check(CLI::IsMember({"max", "sum"}));
  mc->add_option("--ordering", ordering_s)->check(CLI::IsMember({"unordered", "ordered"}));
  mc->add_option("--checkpoint", checkpoint, "resumable checkpoint file");
  mc->add_option("--every", every, "nodes between checkpoints")->check(CLI::PositiveNumber);

  // markoff-fit
  std::string bounds_s = "1e3,1e6,1e9,1e12";
  auto* mf = app.add_subcommand("markoff-fit", "fit count = C (ln x)^2 + D ln x ln ln x");
  common(mf);
  mf->add_option("--bounds", bounds_s);
  mf->add_option("--norm", norm_s)->check(CLI::IsMember({"max", "sum"}));

  // count-simple
  Surface surf;
  std::string L_s = "10";
  auto* cs = app.add_subcommand("count-simple", "simple closed geodesics of length <= L");
  common(cs);
  surf.add(cs);
  cs->add_option("--L", L_s);

  // count-word
  std::string word_s, slope_s;
  bool debug = false;
  double ball_tol = 1e-9;
  auto* cw = app.add_subcommand("count-word", "curves in the mapping class orbit of a word, on an L grid");
  common(cw);
  surf.add(cw);
  cw->add_option("--word", word_s)->required();
  cw->add_option("--L", L_s);
  cw->add_flag("--debug", debug, "expand one level past every pruned vertex");
  cw->add_option("--ball-tol", ball_tol)->check(CLI::PositiveNumber);
  cw->add_option("--checkpoint", checkpoint, "resumable ORB1 report");

  // bx
  auto* bx = app.add_subcommand("bx", "Thurston volume B(X) of the unit length ball");
  common(bx, false);
  surf.add(bx);
  bx->add_option("--tol", ball_tol)->check(CLI::PositiveNumber);

  // cone-count
  std::string m_s = "0,1,2,3";
  auto* cc = app.add_subcommand("cone-count", "orbit points per twist cone");
  common(cc);
  surf.add(cc);
  cc->add_option("--m", m_s, "cone indices");
  cc->add_option("--L", L_s);

  // ball-volume
  std::uint64_t samples = 0;
  auto* bv = app.add_subcommand("ball-volume", "Weil-Petersson volume of the length ball of a word");
  common(bv);
  bv->add_option("--word", word_s)->required();
  bv->add_option("--L", L_s);
  bv->add_option("--samples", samples, "Monte Carlo samples of the orbit count average (0 skips it)");
  bv->add_option("--seed", seed);

  // apl-ray
  std::string dir_s = "1,0", radii_s = "10:1000", x0_s = "0,1,0", transform_s = "length";
  auto* ar = app.add_subcommand("apl-ray", "asymptotic linear fit of a length function along a ray");
  common(ar);
  ar->add_option("--word", word_s);
  ar->add_option("--slope", slope_s, "simple curve p/q");
  ar->add_option("--dir", dir_s, "ray direction dl,dtau");
  ar->add_option("--radii", radii_s, "lo:hi[:n] or a comma list");
  ar->add_option("--x0", x0_s, "base point l1,l,tau");
  ar->add_option("--transform", transform_s)->check(CLI::IsMember({"length", "log-sinh"}));

  // wall-scan
  int grid = 64;
  double scale = 200;
  auto* ws = app.add_subcommand("wall-scan", "walls of the asymptotic fan in the FN half plane");
  common(ws);
  ws->add_option("--word", word_s);
  ws->add_option("--slope", slope_s, "simple curve p/q");
  ws->add_option("--x0", x0_s, "base point l1,l,tau");
  ws->add_option("--grid", grid)->check(CLI::Range(32, 1 << 16));
  ws->add_option("--scale", scale)->check(CLI::PositiveNumber);

  // checks
  std::uint64_t trials = 10000, points = 100;
  double h = 0.05;
  auto* hc = app.add_subcommand("hexagon-check", "round trips and asymptotic bounds of the hexagon formulas");
  common(hc, false);
  hc->add_option("--trials", trials)->check(CLI::PositiveNumber);
  hc->add_option("--seed", seed);
  auto* wc = app.add_subcommand("wolpert-check", "symplectic Jacobian of the elementary move");
  common(wc, false);
  wc->add_option("--points", points)->check(CLI::PositiveNumber);
  wc->add_option("--seed", seed);
  auto* tc = app.add_subcommand("twist-convexity", "Dehn twist identity and convexity along twist lines");
  common(tc, false);
  tc->add_option("--points", points)->check(CLI::PositiveNumber);
  tc->add_option("--seed", seed);
  tc->add_option("--step", h, "second difference step")->check(CLI::PositiveNumber);

  // acceptance
  std::string only_s;
  std::uint64_t acc_seed = acceptance::Options{}.seed;
  auto* ac = app.add_subcommand("acceptance", "run the acceptance criteria");
  common(ac);
  ac->add_option("--only", only_s, "comma list of criterion numbers");
  ac->add_option("--seed", acc_seed);

  // report
  std::vector<std::string> files;
  auto* rp = app.add_subcommand("report", "merge report files into one summary table");
  rp->add_option("files", files, "report files")->required();
  rp->add_option("--out", io.out, "summary path");
  rp->add_flag("--assert", io.assert_pass, "exit 3 when any row failed");

  // the config file becomes flags placed ahead of the command line ones
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string cfg;
      std::size_t drop = 0;
      if (args[i] == "--config" && i + 1 < args.size()) cfg = args[i + 1], drop = 2;
      else if (args[i].rfind("--config=", 0) == 0) cfg = args[i].substr(9), drop = 1;
      if (!drop) continue;
      CLI::App* sub = nullptr;
      for (std::size_t k = 0; k < i; ++k)
        if (auto* s = app.get_subcommand_no_throw(args[k])) sub = s;
      if (!sub) throw ConfigError("--config must follow a subcommand");
      std::vector<std::string> expanded;
      for (auto& [k, v] : read_config(cfg)) {
        if (k == "config" || !sub->get_option_no_throw("--" + k)) throw ConfigError("config " + cfg + ": unknown key '" + k + "'");
        expanded.push_back("--" + k + "=" + v);
      }
      args.erase(args.begin() + i, args.begin() + i + drop);
      std::size_t at = std::find(args.begin(), args.end(), sub->get_name()) - args.begin() + 1;
      args.insert(args.begin() + at, expanded.begin(), expanded.end());
      break;
    }
  } catch (const Error& e) {
    std::cerr << "teichlab: " << e.what() << "\n";
    return kInvalid;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (const char* env = std::getenv("TEICHLAB_WORKERS")) {
      double w = positive(env, "TEICHLAB_WORKERS");
      if (w != std::floor(w) || w > 4096) throw ConfigError("TEICHLAB_WORKERS must be a positive integer");
      workers = unsigned(w);
    }

    if (mc->parsed()) {
      big_int bound = bound_value(bound_s);
      auto norm = norm_value(norm_s);
      std::string rows;
      markoff::Enumerator::Visitor visit = nullptr;
      if (!io.csv.empty()) {
        rows = csv_line({"p", "q", "r", "depth", "parent_move"});
        visit = [&](const markoff::TreeNode& n) { rows += csv_line(split(markoff::csv_row(n), ',')); };
      }
      markoff::CountResult r;
      if (!checkpoint.empty()) {
        bool resume = std::filesystem::exists(checkpoint);
        if (resume && visit) throw ConfigError("--csv needs a fresh run; remove the checkpoint first");
        auto e = resume ? markoff::Enumerator::load(checkpoint) : markoff::Enumerator(bound, norm);
        if (e.bound() != bound || e.norm() != norm) throw ConfigError("checkpoint " + checkpoint + " was made for another bound or norm");
        e.run_checkpointed(checkpoint, every, visit);
        r = e.result();
      } else if (visit || workers == 1) {
        markoff::Enumerator e(bound, norm);
        e.run(UINT64_MAX, visit);
        r = e.result();
      } else {
        r = markoff::enumerate_parallel(bound, norm, workers);
      }
      const big_int& count = ordering_s == "ordered" ? r.ordered : r.unordered;
      kv("count", count.str());
      io.json_file({{"schema", "MKC1"}, {"bound", bound.str()}, {"norm", norm_s}, {"ordering", ordering_s}, {"count", count.str()},
                    {"unordered", r.unordered.str()}, {"ordered", r.ordered.str()}, {"nodes", r.nodes}});
      io.csv_file(rows);
    } else if (mf->parsed()) {
      auto norm = norm_value(norm_s);
      std::vector<std::pair<double, double>> s;
      std::vector<std::string> bs, counts;
      for (auto& b : split(bounds_s, ',')) {
        big_int x = bound_value(b);
        big_int c = markoff::enumerate_parallel(x, norm, workers).unordered;
        s.push_back({x.convert_to<double>(), c.convert_to<double>()});
        bs.push_back(x.str());
        counts.push_back(c.str());
      }
      auto fit = markoff::fit_growth(s);
      kv("C", num17(fit.C));
      kv("D", num17(fit.D));
      kv("max_relative_residual", num17(fit.max_abs_relative_residual));
      io.json_file({{"schema", "MKF1"}, {"norm", norm_s}, {"bounds", bs}, {"counts", counts}, {"C", fit.C}, {"D", fit.D},
                    {"condition", fit.condition}, {"relative_residuals", fit.relative_residuals}});
      std::string rows = csv_line({"bound", "count", "count_over_log2", "relative_residual"});
      for (std::size_t i = 0; i < s.size(); ++i)
        rows += csv_line({bs[i], counts[i], num17(s[i].second / std::pow(std::log(s[i].first), 2)), num17(fit.relative_residuals[i])});
      io.csv_file(rows);
    } else if (cs->parsed()) {
      auto X = surf.get();
      auto Ls = lengths(L_s);
      json cj = json::array();
      std::string rows = csv_line({"L", "count"});
      for (double L : Ls) {
        auto n = orbit::count_simple(X, L, workers);
        cj.push_back(n);
        rows += csv_line({num17(L), std::to_string(n)});
        if (Ls.size() == 1) kv("count", std::to_string(n));
        else kv("count(" + num17(L) + ")", std::to_string(n));
      }
      io.json_file({{"schema", "SIM1"}, {"X", triple_json(X)}, {"L", Ls}, {"count", cj}});
      io.csv_file(rows);
    } else if (cw->parsed()) {
      auto X = surf.get();
      Word w = word_value(word_s);
      orbit::OrbitOptions opt;
      opt.workers = workers;
      opt.debug_expand = debug;
      auto r = checkpoint.empty() ? orbit::count_report(X, w, lengths(L_s), opt, ball_tol)
                                  : orbit::count_report_resumable(X, w, lengths(L_s), checkpoint, opt, ball_tol);
      std::string rows = csv_line({"L", "a1", "a3", "a1_over_L2"});
      for (std::size_t i = 0; i < r.L.size(); ++i) {
        rows += csv_line({num17(r.L[i]), std::to_string(r.a1[i]), r.a3[i] ? std::to_string(*r.a3[i]) : "", num17(r.normalized[i])});
        kv("count(" + num17(r.L[i]) + ")", std::to_string(r.a1[i]));
      }
      kv("kind", r.kind);
      kv("B", num17(r.B));
      kv("pruning_violations", std::to_string(r.pruning_violations));
      io.json_file(r.to_json());
      io.csv_file(rows);
      if (r.pruning_violations) throw InvariantError("pruning violated at " + std::to_string(r.pruning_violations) + " vertices");
    } else if (bx->parsed()) {
      auto X = surf.get();
      auto b = orbit::thurston_ball_B(X, ball_tol);
      kv("B", num17(b.B));
      kv("error", num17(b.error));
      io.json_file({{"schema", "BX1"}, {"X", triple_json(X)}, {"tol", ball_tol}, {"B", b.B}, {"error", b.error},
                    {"max_denominator", b.max_denominator}, {"sectors", b.sectors}});
    } else if (cc->parsed()) {
      auto X = surf.get();
      auto Ls = lengths(L_s);
      json cj = json::array();
      std::string rows = csv_line({"m", "L", "count"});
      for (double mv : numbers(m_s, "m")) {
        if (mv != std::floor(mv)) throw ConfigError("m must be integers");
        for (double L : Ls) {
          auto n = orbit::cone_count(X, (long long)mv, L);
          cj.push_back({{"m", (long long)mv}, {"L", L}, {"count", n}});
          rows += csv_line({std::to_string((long long)mv), num17(L), std::to_string(n)});
          kv("count(m=" + std::to_string((long long)mv) + ",L=" + num17(L) + ")", std::to_string(n));
        }
      }
      io.json_file({{"schema", "CONE1"}, {"X", triple_json(X)}, {"cones", cj}});
      io.csv_file(rows);
    } else if (bv->parsed()) {
      Word w = word_value(word_s);
      auto Ls = lengths(L_s);
      json vj = json::array();
      std::string rows = csv_line({"L", "area", "vol", "mc_average", "mc_stderr"});
      for (double L : Ls) {
        auto v = orbit::ball_volume(w, L);
        json e = {{"L", L}, {"area", v.area}, {"vol", v.vol}, {"stab_sl", v.stab_sl}};
        std::string avg, se;
        if (samples) {
          auto a = orbit::wp_average(w, L, samples, seed, workers);
          e["mc_average"] = a.avg;
          e["mc_stderr"] = a.stderr_;
          e["mc_acceptance"] = a.acceptance;
          avg = num17(a.avg);
          se = num17(a.stderr_);
        }
        vj.push_back(e);
        rows += csv_line({num17(L), num17(v.area), num17(v.vol), avg, se});
        kv("vol(" + num17(L) + ")", num17(v.vol));
        if (samples) kv("average(" + num17(L) + ")", avg + " +- " + se);
      }
      io.json_file({{"schema", "VOL1"}, {"word", w.str()}, {"samples", samples}, {"seed", seed}, {"volumes", vj}});
      io.csv_file(rows);
    } else if (ar->parsed()) {
      auto c = curve_value(word_s, slope_s);
      auto d = numbers(dir_s, "dir", 2);
      auto f = apl::ray_fit(c, base_point(x0_s), {d[0], d[1]}, radii(radii_s),
                            transform_s == "length" ? apl::Transform::length : apl::Transform::log_sinh);
      kv("slope_vector", num17(f.slope_vector[0]) + "," + num17(f.slope_vector[1]));
      kv("offset", num17(f.offset));
      kv("on_wall", f.on_wall ? "true" : "false");
      kv("rational", f.rational ? "true" : "false");
      io.json_file(f.to_json());
      io.csv_file(f.to_csv());
      io.check(f.rational && !f.on_wall, "rationality");
    } else if (ws->parsed()) {
      auto c = curve_value(word_s, slope_s);
      apl::Slice sl;
      sl.scale = scale;
      auto r = apl::wall_scan(c, base_point(x0_s), sl, grid, workers);
      kv("wall_count", std::to_string(r.walls.size()));
      kv("cones", std::to_string(r.cones.size()));
      auto j = r.to_json();
      io.json_file(j);
      std::string rows = csv_line({"theta", "g_l", "g_tau", "mismatch", "stable"});
      for (auto& cell : j["grid"]) {
        std::vector<std::string> f;
        for (auto& [k, v] : cell.items()) f.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        rows += csv_line(f);
      }
      if (!j["grid"].empty()) {
        std::vector<std::string> head;
        for (auto& [k, v] : j["grid"][0].items()) head.push_back(k);
        rows = csv_line(head) + rows.substr(rows.find("\r\n") + 2);
      }
      io.csv_file(rows);
    } else if (hc->parsed()) {
      auto r = checks::hexagon_check(trials, seed);
      kv("round_trip_max", num17(r.round_trip_max));
      kv("regular_root_error", num17(r.regular_root_error));
      kv("f1_violations", std::to_string(r.f1_violations));
      kv("pass", r.pass() ? "true" : "false");
      io.json_file(r.to_json());
      io.check(r.pass(), "hexagon check");
    } else if (wc->parsed()) {
      auto r = checks::wolpert_batch(points, seed);
      kv("max_defect_s11", num17(r.max_defect_s11));
      kv("max_defect_s04", num17(r.max_defect_s04));
      kv("pass", r.pass() ? "true" : "false");
      io.json_file(r.to_json());
      io.check(r.pass(), "wolpert check");
    } else if (tc->parsed()) {
      auto r = checks::twist_convexity(points, seed, h);
      kv("spectrum_max_rel", num17(r.spectrum_max_rel));
      kv("min_second_difference", num17(r.min_second_difference));
      kv("pass", r.pass() ? "true" : "false");
      io.json_file(r.to_json());
      io.check(r.pass(), "twist convexity");
    } else if (ac->parsed()) {
      std::vector<int> only;
      if (!only_s.empty())
        for (double v : numbers(only_s, "only")) {
          if (v != std::floor(v) || v < 1 || v > 14) throw ConfigError("only: criteria are numbered 1 to 14");
          only.push_back(int(v));
        }
      bool all = true;
      std::string rows = csv_line({"criterion", "name", "pass", "detail"});
      auto j = acceptance::run({workers, acc_seed}, only, [&](const acceptance::Result& r) {
        all = all && r.pass;
        std::cout << acceptance::line(r) << "\n" << std::flush;
        rows += csv_line({std::to_string(r.id), r.name, r.pass ? "PASS" : "FAIL", r.detail});
      });
      io.json_file(j);
      io.csv_file(rows);
      io.check(all, "acceptance");
    } else if (rp->parsed()) {
      static const std::set<std::string> known{"MKC1", "MKF1", "SIM1", "ORB1", "BX1", "CONE1", "VOL1", "APL1", "HEX1", "WOL1", "TWC1", "ACC1"};
      std::vector<std::pair<std::string, json>> docs;
      std::vector<std::string> raw;
      for (auto& path : files) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot read " + path);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("schema") || !j["schema"].is_string())
          throw SchemaError(path + ": not a versioned report");
        std::string sch = j["schema"];
        if (!known.count(sch)) throw SchemaError(path + ": unsupported schema version " + sch);
        docs.push_back({path, j});
        raw.push_back(text);
      }
      std::string result;
      bool all = true;
      std::string s0 = docs[0].second["schema"];
      if (docs.size() == 1 && (s0 == "ORB1" || s0 == "APL1")) {
        if (s0 == "ORB1") orbit::CountReport::from_json(docs[0].second);
        result = raw[0];
      } else {
        result = csv_line({"source", "schema", "item", "result", "pass"});
        for (auto& [path, j] : docs) {
          std::string sch = j["schema"];
          auto row = [&](const std::string& item, const std::string& res, const json& pass) {
            std::string p = pass.is_boolean() ? (pass.get<bool>() ? "PASS" : "FAIL") : "";
            if (pass.is_boolean()) all = all && pass.get<bool>();
            result += csv_line({path, sch, item, res, p});
          };
          if (sch == "ACC1") {
            for (auto& c : j["criteria"]) row("criterion " + c["id"].dump() + " " + c["name"].get<std::string>(), c["values"].dump(), c["pass"]);
          } else if (sch == "ORB1") {
            auto r = orbit::CountReport::from_json(j);
            for (std::size_t i = 0; i < r.L.size(); ++i)
              row(r.word + " L=" + num17(r.L[i]), "a1=" + std::to_string(r.a1[i]) + " a1/L^2=" + num17(r.normalized[i]), r.pruning_violations == 0);
          } else if (sch == "APL1" && j.value("type", "") == "ray_fit") {
            row(j.value("curve", "") + " ray", "slope_vector=" + j["slope_vector"].dump() + " offset=" + j["offset"].dump(),
                j.value("rational", false) && !j.value("on_wall", true));
          } else if (sch == "APL1") {
            row(j.value("curve", "") + " walls", "wall_count=" + j["wall_count"].dump(), nullptr);
          } else {
            json rest = j;
            rest.erase("schema");
            json pass = rest.contains("pass") ? rest["pass"] : json(nullptr);
            rest.erase("pass");
            row(sch, rest.dump(), pass);
          }
        }
      }
      if (io.out.empty()) std::cout << result;
      else write_atomic(io.out, result);
      io.check(all, "report");
    }
  } catch (const CheckFailed& e) {
    std::cerr << "teichlab: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const ConfigError& e) {
    std::cerr << "teichlab: invalid config: " << e.what() << "\n";
    return kInvalid;
  } catch (const PreconditionError& e) {
    std::cerr << "teichlab: " << e.what() << "\n";
    return kInvalid;
  } catch (const DomainError& e) {
    std::cerr << "teichlab: " << e.what() << "\n";
    return kInvalid;
  } catch (const SchemaError& e) {
    std::cerr << "teichlab: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "teichlab: " << e.what() << "\n";
    return kRuntime;
  }
  return 0;
}
