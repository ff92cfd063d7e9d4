#pragma once

#include <algorithm>
#include <cctype>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quitting/block.hpp"
#include "quitting/classify.hpp"
#include "quitting/game.hpp"
#include "quitting/geometry.hpp"
#include "quitting/json_io.hpp"
#include "quitting/lcp.hpp"
#include "quitting/stationary.hpp"
#include "quitting/sunspot.hpp"

namespace quitting {

inline constexpr const char* kCliVersion = "0.1.0";

namespace cli_detail {

struct Options {
  std::string game_path;
  std::string matrix_path;
  std::string profile_path;
  std::string q_arg;
  std::string y_arg;
  std::string target_arg;
  double eps = 0.1;
  double tolerance = 1e-9;
  long samples = 10000;
  long long runs = 100000;
  std::uint64_t seed = 12345;
  bool exact = false;
};

template <class T>
T parse_scalar(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw game_error("empty number in vector argument");
  return scalar_from_json<T>(nlohmann::json(s));
}

template <class T>
Vec<T> parse_vec(const std::string& arg) {
  Vec<T> v;
  std::string tok;
  std::stringstream ss(arg);
  while (std::getline(ss, tok, ',')) v.push_back(parse_scalar<T>(tok));
  if (v.empty()) throw game_error("empty vector argument");
  return v;
}

inline ordered_json head(const std::string& command, bool exact) {
  ordered_json j;
  j["tool"] = "quitting";
  j["version"] = kCliVersion;
  j["command"] = command;
  j["mode"] = exact ? "exact" : "double";
  return j;
}

template <class T>
ordered_json normalization_json(const QuittingGame<T>& g) {
  ordered_json j;
  j["shift"] = json_vec(g.shift);
  j["scale_divisor"] = json_number(g.scale_factor);
  j["defaults_used"] = g.defaults_used;
  return j;
}

inline ordered_json players_json(const std::vector<int>& ids) {
  ordered_json a = ordered_json::array();
  for (int i : ids) a.push_back(i + 1);
  return a;
}

template <class T>
ordered_json block_json(const BuildingBlock<T>& blk) {
  ordered_json j;
  j["construction"] = blk.construction;
  j["y"] = json_vec(blk.y);
  j["w"] = json_vec(blk.w);
  j["z"] = json_vec(blk.z);
  ordered_json lam = ordered_json::object();
  for (const auto& [i, v] : blk.lambda) lam[std::to_string(i + 1)] = json_number(v);
  j["lambda"] = lam;
  ordered_json wi = ordered_json::object();
  for (const auto& [i, v] : blk.w_i) wi[std::to_string(i + 1)] = json_vec(v);
  j["w_i"] = wi;
  return j;
}

template <class T>
ordered_json check_json(const BlockCheck<T>& c) {
  ordered_json j;
  j["on_segment"] = c.on_segment;
  j["above_floor"] = c.above_floor;
  j["mix_identity"] = c.mix_identity;
  j["own_zero"] = c.own_zero;
  j["off_anchor_mass"] = c.off_anchor_mass;
  j["z_prob"] = c.z_prob;
  j["w_on_boundary"] = c.w_on_boundary;
  j["near_anchor"] = c.near_anchor;
  j["mix_residual"] = json_number(c.mix_residual);
  j["anchor_distance"] = json_number(c.anchor_distance);
  j["anchor_bound"] = json_number(c.anchor_bound);
  j["pass"] = c.pass;
  if (!c.failure.empty()) j["failure"] = c.failure;
  return j;
}

template <class T>
bool gains_within(const Vec<T>& gains, const T& bound, double tolerance) {
  for (const auto& g : gains)
    if (scalar_traits<T>::to_double(g) > scalar_traits<T>::to_double(bound) + tolerance)
      return false;
  return true;
}

template <class T>
double max_gain(const Vec<T>& gains) {
  double m = 0.0;
  for (const auto& g : gains) m = std::max(m, scalar_traits<T>::to_double(g));
  return m;
}

template <class T>
int run_classify(const Options& opt, std::ostream& out) {
  auto game = normalize(load_game<T>(opt.game_path));
  auto cls = classify_players(game);
  ordered_json j = head("classify", opt.exact);
  j["players"] = game.n_players;
  j["normalization"] = normalization_json(game);
  ordered_json chain = ordered_json::array();
  for (const auto& level : cls.chain) chain.push_back(players_json(level));
  j["chain"] = chain;
  j["normal_set"] = players_json(cls.normal_set);
  j["player_order"] = players_json(cls.player_order);
  j["separation_ok"] = cls.separation_ok;
  if (!cls.normal_set.empty()) j["restricted_matrix"] = json_mat(cls.restricted);
  out << j.dump(2) << '\n';
  return 0;
}

template <class T>
int run_lcp(const Options& opt, std::ostream& out) {
  auto r = load_matrix<T>(opt.matrix_path);
  auto q = parse_vec<T>(opt.q_arg);
  if (q.size() != r.size())
    throw game_error("q has " + std::to_string(q.size()) + " entries but the matrix is " +
                     std::to_string(r.size()) + "x" + std::to_string(r.size()));
  ordered_json j = head("lcp", opt.exact);
  j["dimension"] = r.size();
  auto sol = solve_lcp(r, q);
  j["solvable"] = bool(sol);
  if (sol) {
    j["w"] = json_vec(sol->w);
    j["z"] = json_vec(sol->z);
    j["support"] = players_json(sol->support);
  }
  j["solvable_exact"] = lcp_solvable_exact(r, q);
  out << j.dump(2) << '\n';
  return 0;
}

inline int run_qtest(const Options& opt, std::ostream& out) {
  auto r = load_matrix<double>(opt.matrix_path);
  auto v = q_matrix_test(r, opt.samples, opt.seed);
  ordered_json j = head("qtest", false);
  j["dimension"] = r.size();
  switch (v.verdict) {
    case QMatrixVerdict::Kind::Q_certified: j["verdict"] = "Q_certified"; break;
    case QMatrixVerdict::Kind::not_Q_with_witness: j["verdict"] = "not_Q_with_witness"; break;
    case QMatrixVerdict::Kind::probably_Q: j["verdict"] = "probably_Q"; break;
  }
  j["method"] = v.method;
  j["samples_used"] = v.samples_used;
  if (v.witness_q) j["witness_q"] = json_vec(*v.witness_q);
  out << j.dump(2) << '\n';
  return 0;
}

template <class T>
int run_stationary(const Options& opt, std::ostream& out) {
  auto game = normalize(load_game<T>(opt.game_path));
  auto rep = find_stationary(game, opt.eps);
  ordered_json j = head("stationary", opt.exact);
  j["normalization"] = normalization_json(game);
  j["method"] = rep.method;
  j["eps"] = rep.eps;
  j["eps_used"] = rep.eps_used;
  j["bound_factor"] = rep.bound_factor;
  j["bound"] = json_number(rep.bound);
  j["x"] = json_vec(rep.x);
  j["payoff"] = json_vec(rep.payoff);
  j["gains"] = json_vec(rep.gains);
  j["max_gain"] = max_gain(rep.gains);
  const bool pass = gains_within(rep.gains, rep.bound, opt.tolerance);
  j["pass"] = pass;
  out << j.dump(2) << '\n';
  return pass ? 0 : 2;
}

template <class T>
int run_block(const Options& opt, std::ostream& out) {
  auto game = normalize(load_game<T>(opt.game_path));
  auto cls = classify_players(game);
  const Mat<T>& rhat = restricted_matrix(cls);
  auto d = make_feasible_set(rhat);
  Vec<T> y;
  if (opt.y_arg.empty()) {
    y = initial_anchor(rhat);
  } else {
    y = parse_vec<T>(opt.y_arg);
    if (y.size() != rhat.size())
      throw game_error("anchor needs one entry per normal player (" +
                       std::to_string(rhat.size()) + ")");
  }
  auto blk = build_block(rhat, d, y, opt.eps);
  auto chk = check_block(blk, d, opt.eps);
  ordered_json j = head("block", opt.exact);
  j["eps"] = opt.eps;
  j["normal_set"] = players_json(cls.normal_set);
  j["block"] = block_json(blk);
  j["check"] = check_json(chk);
  out << j.dump(2) << '\n';
  return chk.pass ? 0 : 2;
}

// Implements a requested payoff vector through the sign-pattern construction,
// verifies the resulting profile, and reports the outcome. Shared by the
// `sunspot --target` and `mmatrix --target` paths.
template <class T>
ordered_json implement_target_json(const QuittingGame<T>& game, const Classification<T>& cls,
                                   const Options& opt, bool& pass) {
  auto target = parse_vec<T>(opt.target_arg);
  if (static_cast<int>(target.size()) != game.n_players)
    throw game_error("target needs one entry per player (" +
                     std::to_string(game.n_players) + ")");
  auto prof = implement_payoff(game, cls, target, opt.eps);
  auto rep = verify_sunspot(game, prof, opt.eps);
  double verr = 0.0;
  for (int i = 0; i < game.n_players; ++i)
    verr = std::max(verr, std::abs(scalar_traits<T>::to_double(rep.value[i] - target[i])));
  ordered_json impl;
  impl["eps"] = opt.eps;
  impl["kiloblocks"] = prof.kiloblocks.size();
  impl["target"] = json_vec(target);
  impl["value"] = json_vec(rep.value);
  impl["value_error"] = verr;
  impl["gains"] = json_vec(rep.gains);
  impl["max_gain"] = max_gain(rep.gains);
  impl["termination_prob"] = json_number(rep.termination);
  impl["bound"] = json_number(rep.bound);
  pass = gains_within(rep.gains, rep.bound, opt.tolerance) && verr <= opt.tolerance;
  impl["pass"] = pass;
  if (!opt.profile_path.empty()) {
    save_json(profile_to_json(prof), opt.profile_path);
    impl["profile_file"] = opt.profile_path;
  }
  return impl;
}

template <class T>
int run_sunspot(const Options& opt, std::ostream& out) {
  auto game = normalize(load_game<T>(opt.game_path));
  if (!opt.target_arg.empty()) {
    auto cls = classify_players(game);
    ordered_json j = head("sunspot", opt.exact);
    j["normalization"] = normalization_json(game);
    j["normal_set"] = players_json(cls.normal_set);
    j["path"] = "target";
    bool pass = false;
    j["implementation"] = implement_target_json(game, cls, opt, pass);
    out << j.dump(2) << '\n';
    return pass ? 0 : 2;
  }
  auto res = build_sunspot(game, opt.eps);
  ordered_json j = head("sunspot", opt.exact);
  j["normalization"] = normalization_json(game);
  j["path"] = "anchor_walk";
  j["eps"] = opt.eps;
  ordered_json seq;
  seq["steps"] = res.seq.blocks.size();
  seq["drift_sum"] = json_number(res.seq.drift_sum);
  seq["drift_target"] = json_number(res.seq.drift_target);
  seq["jump_sum"] = json_number(res.seq.jump_sum);
  seq["aitken_jumps"] = res.seq.aitken_jumps;
  seq["initial_anchor"] = json_vec(res.seq.points.front());
  j["sequence"] = seq;
  j["kiloblocks"] = res.profile.kiloblocks.size();
  ordered_json checks;
  checks["drift_ok"] = res.drift_ok;
  checks["jump_ok"] = res.jump_ok;
  checks["value_near_anchor"] = res.value_near_anchor;
  checks["megablocks_ok"] = res.megablocks_ok;
  j["checks"] = checks;
  j["value"] = json_vec(res.report.value);
  j["gains"] = json_vec(res.report.gains);
  j["max_gain"] = max_gain(res.report.gains);
  j["termination_prob"] = json_number(res.report.termination);
  j["bound_factor"] = res.report.bound_factor;
  j["bound"] = json_number(res.report.bound);
  const bool pass = gains_within(res.report.gains, res.report.bound, opt.tolerance) &&
                    res.drift_ok && res.jump_ok && res.value_near_anchor;
  j["pass"] = pass;
  if (!opt.profile_path.empty()) {
    save_json(profile_to_json(res.profile), opt.profile_path);
    j["profile_file"] = opt.profile_path;
  }
  out << j.dump(2) << '\n';
  return pass ? 0 : 2;
}

template <class T>
int run_verify(const Options& opt, std::ostream& out) {
  auto game = normalize(load_game<T>(opt.game_path));
  auto prof = load_profile<T>(opt.profile_path);
  if (prof.players != game.n_players)
    throw game_error("profile is for " + std::to_string(prof.players) +
                     " players but the game has " + std::to_string(game.n_players));
  auto rep = verify_sunspot(game, prof, opt.eps);
  ordered_json j = head("verify", opt.exact);
  j["normalization"] = normalization_json(game);
  j["eps"] = rep.eps;
  j["bound_factor"] = rep.bound_factor;
  j["bound"] = json_number(rep.bound);
  j["kiloblocks"] = prof.kiloblocks.size();
  j["value"] = json_vec(rep.value);
  j["gains"] = json_vec(rep.gains);
  j["max_gain"] = max_gain(rep.gains);
  j["termination_prob"] = json_number(rep.termination);
  const bool pass = gains_within(rep.gains, rep.bound, opt.tolerance);
  j["pass"] = pass;
  out << j.dump(2) << '\n';
  return pass ? 0 : 2;
}

inline int run_simulate(const Options& opt, std::ostream& out) {
  auto game = normalize(load_game<double>(opt.game_path));
  auto prof = load_profile<double>(opt.profile_path);
  if (prof.players != game.n_players)
    throw game_error("profile is for " + std::to_string(prof.players) +
                     " players but the game has " + std::to_string(game.n_players));
  auto rep = simulate(game, prof, opt.runs, opt.seed);
  ordered_json j = head("simulate", false);
  j["runs"] = rep.runs;
  j["seed"] = rep.seed;
  j["mean"] = json_vec(rep.mean);
  j["se"] = json_vec(rep.se);
  j["value"] = json_vec(exact_value(game, prof));
  j["termination_freq"] = rep.termination_freq;
  ordered_json hist = ordered_json::object();
  for (const auto& [k, count] : rep.histogram) hist[std::to_string(k)] = count;
  j["quit_histogram"] = hist;
  out << j.dump(2) << '\n';
  return 0;
}

template <class T>
int run_mmatrix(const Options& opt, std::ostream& out) {
  if (!opt.game_path.empty() && !opt.matrix_path.empty())
    throw game_error("give either a game file or --matrix, not both");
  if (opt.game_path.empty() && opt.matrix_path.empty())
    throw game_error("mmatrix needs a game file or --matrix");

  ordered_json j = head("mmatrix", opt.exact);
  QuittingGame<T> game;
  Classification<T> cls;
  Mat<T> rhat;
  const bool have_game = !opt.game_path.empty();
  if (have_game) {
    game = normalize(load_game<T>(opt.game_path));
    cls = classify_players(game);
    rhat = restricted_matrix(cls);
    j["normalization"] = normalization_json(game);
    j["normal_set"] = players_json(cls.normal_set);
  } else {
    rhat = load_matrix<T>(opt.matrix_path);
  }

  auto ts = m_matrix_targets(rhat);
  ordered_json targets = ordered_json::array();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ordered_json t;
    t["column"] = i + 1;
    if (have_game) t["player"] = cls.player_order[i] + 1;
    t["w"] = json_vec(ts[i].w);
    t["lambda"] = json_vec(ts[i].lambda);
    t["l1_norm"] = json_number(ts[i].l1);
    t["branch_column"] = ts[i].j + 1;
    t["alpha"] = json_number(ts[i].alpha);
    t["y"] = json_vec(ts[i].y);
    t["beta"] = json_vec(ts[i].beta);
    targets.push_back(t);
  }
  j["targets"] = targets;

  int exit_code = 0;
  if (!opt.target_arg.empty()) {
    if (!have_game) throw game_error("--target requires a game file, not --matrix");
    bool pass = false;
    j["implementation"] = implement_target_json(game, cls, opt, pass);
    if (!pass) exit_code = 2;
  }
  out << j.dump(2) << '\n';
  return exit_code;
}

}  // namespace cli_detail

// Runs one CLI invocation; args are the words after the program name.
// Exit codes: 0 success / verification passed, 1 bad input, 2 verification failed.
inline int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  using cli_detail::Options;
  CLI::App app{"stationary and sunspot epsilon-equilibria in quitting games"};
  app.name("quitting");
  app.require_subcommand(1);
  Options opt;

  auto add_exact = [&](CLI::App* cmd) {
    cmd->add_flag("--exact", opt.exact, "compute with rational arithmetic");
  };
  auto add_eps = [&](CLI::App* cmd) {
    cmd->add_option("--eps", opt.eps, "equilibrium precision")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };
  auto add_tolerance = [&](CLI::App* cmd) {
    cmd->add_option("--tolerance", opt.tolerance, "numeric slack for pass/fail gates")
        ->capture_default_str();
  };

  auto* c_classify = app.add_subcommand("classify", "player chain and restricted matrix");
  c_classify->add_option("game", opt.game_path, "game JSON file")->required();
  add_exact(c_classify);

  auto* c_lcp = app.add_subcommand("lcp", "solve w = z0 q + R z with complementarity");
  c_lcp->add_option("--matrix", opt.matrix_path, "matrix JSON file")->required();
  c_lcp->add_option("--q", opt.q_arg, "comma-separated q vector")->required();
  add_exact(c_lcp);

  auto* c_qtest = app.add_subcommand("qtest", "decide whether a matrix is a Q-matrix");
  c_qtest->add_option("--matrix", opt.matrix_path, "matrix JSON file")->required();
  c_qtest->add_option("--samples", opt.samples, "sampling budget")->capture_default_str();
  c_qtest->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();

  auto* c_stationary = app.add_subcommand("stationary", "stationary profile with small gains");
  c_stationary->add_option("game", opt.game_path, "game JSON file")->required();
  add_eps(c_stationary);
  add_tolerance(c_stationary);
  add_exact(c_stationary);

  auto* c_block = app.add_subcommand("block", "one-period building block at an anchor");
  c_block->add_option("game", opt.game_path, "game JSON file")->required();
  c_block->add_option("--y", opt.y_arg, "anchor over normal players, comma-separated");
  add_eps(c_block);
  add_exact(c_block);

  auto* c_sunspot = app.add_subcommand("sunspot", "build and verify a sunspot profile");
  c_sunspot->add_option("game", opt.game_path, "game JSON file")->required();
  c_sunspot->add_option("--target", opt.target_arg,
                        "payoff vector to implement via the sign-pattern path");
  c_sunspot->add_option("--profile", opt.profile_path, "write the profile to this file");
  add_eps(c_sunspot);
  add_tolerance(c_sunspot);
  add_exact(c_sunspot);

  auto* c_verify = app.add_subcommand("verify", "evaluate a profile file against a game");
  c_verify->add_option("game", opt.game_path, "game JSON file")->required();
  c_verify->add_option("--profile", opt.profile_path, "profile JSON file")->required();
  add_eps(c_verify);
  add_tolerance(c_verify);
  add_exact(c_verify);

  auto* c_simulate = app.add_subcommand("simulate", "Monte Carlo playout of a profile");
  c_simulate->add_option("game", opt.game_path, "game JSON file")->required();
  c_simulate->add_option("--profile", opt.profile_path, "profile JSON file")->required();
  c_simulate->add_option("--runs", opt.runs, "number of playouts")->capture_default_str();
  c_simulate->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();

  auto* c_mmatrix = app.add_subcommand("mmatrix",
                                       "frequency targets for one-sign restricted matrices");
  c_mmatrix->add_option("game", opt.game_path, "game JSON file");
  c_mmatrix->add_option("--matrix", opt.matrix_path, "restricted matrix JSON file");
  c_mmatrix->add_option("--target", opt.target_arg, "payoff vector to implement");
  c_mmatrix->add_option("--profile", opt.profile_path, "write the implementing profile here");
  add_eps(c_mmatrix);
  add_tolerance(c_mmatrix);
  add_exact(c_mmatrix);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }

  try {
    using namespace cli_detail;
    if (*c_classify) return opt.exact ? run_classify<rational>(opt, out) : run_classify<double>(opt, out);
    if (*c_lcp) return opt.exact ? run_lcp<rational>(opt, out) : run_lcp<double>(opt, out);
    if (*c_qtest) return run_qtest(opt, out);
    if (*c_stationary)
      return opt.exact ? run_stationary<rational>(opt, out) : run_stationary<double>(opt, out);
    if (*c_block) return opt.exact ? run_block<rational>(opt, out) : run_block<double>(opt, out);
    if (*c_sunspot)
      return opt.exact ? run_sunspot<rational>(opt, out) : run_sunspot<double>(opt, out);
    if (*c_verify) return opt.exact ? run_verify<rational>(opt, out) : run_verify<double>(opt, out);
    if (*c_simulate) return run_simulate(opt, out);
    if (*c_mmatrix)
      return opt.exact ? run_mmatrix<rational>(opt, out) : run_mmatrix<double>(opt, out);
  } catch (const block_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const game_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace quitting
