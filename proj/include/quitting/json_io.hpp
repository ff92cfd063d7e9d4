#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "quitting/game.hpp"
#include "quitting/stationary.hpp"
#include "quitting/sunspot.hpp"

namespace quitting {

using ordered_json = nlohmann::ordered_json;

namespace detail {

// SAX pass that only checks for duplicate keys; the regular DOM parser would
// silently keep the last duplicate.
struct DuplicateKeySax {
  using json = nlohmann::json;
  std::vector<std::set<std::string>> stack;
  std::string duplicate;
  bool null() { return true; }
  bool boolean(bool) { return true; }
  bool number_integer(json::number_integer_t) { return true; }
  bool number_unsigned(json::number_unsigned_t) { return true; }
  bool number_float(json::number_float_t, const std::string&) { return true; }
  bool string(std::string&) { return true; }
  bool binary(json::binary_t&) { return true; }
  bool start_object(std::size_t) {
    stack.emplace_back();
    return true;
  }
  bool key(std::string& k) {
    if (!stack.back().insert(k).second) {
      duplicate = k;
      return false;
    }
    return true;
  }
  bool end_object() {
    stack.pop_back();
    return true;
  }
  bool start_array(std::size_t) { return true; }
  bool end_array() { return true; }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) {
    return false;
  }
};

}  // namespace detail

inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  detail::DuplicateKeySax sax;
  if (!nlohmann::json::sax_parse(text, &sax)) {
    if (!sax.duplicate.empty())
      throw game_error(origin + ": duplicate key \"" + sax.duplicate + "\"");
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw game_error(origin + ": " + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw game_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), path);
}

// --------------------------------------------------------------------------
// Scalars
// --------------------------------------------------------------------------

template <class T>
T scalar_from_json(const nlohmann::json& j) {
  if (j.is_number()) return scalar_traits<T>::from_double(j.get<double>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      if constexpr (scalar_traits<T>::exact) {
        using Int = boost::multiprecision::cpp_int;
        if (slash != std::string::npos)
          return T(Int(s.substr(0, slash))) / T(Int(s.substr(slash + 1)));
        if (s.find_first_of(".eE") == std::string::npos) return T(Int(s));
        return scalar_traits<T>::from_double(std::stod(s));
      } else {
        if (slash == std::string::npos) return std::stod(s);
        return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
      }
    } catch (const std::exception&) {
      throw game_error("cannot parse number \"" + s + "\"");
    }
  }
  throw game_error("expected a number, got " + std::string(j.type_name()));
}

inline ordered_json json_number(double v) {
  if (!std::isfinite(v)) return ordered_json(std::string("non-finite"));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return ordered_json::parse(buf);
}

inline ordered_json json_number(const rational& v) {
  return ordered_json(scalar_traits<rational>::to_string(v));
}

template <class T>
ordered_json json_vec(const Vec<T>& v) {
  ordered_json arr = ordered_json::array();
  for (const T& x : v) arr.push_back(json_number(x));
  return arr;
}

template <class T>
ordered_json json_mat(const Mat<T>& m) {
  ordered_json arr = ordered_json::array();
  for (const auto& row : m) arr.push_back(json_vec(row));
  return arr;
}

// --------------------------------------------------------------------------
// Games
// --------------------------------------------------------------------------

inline std::uint32_t mask_from_key(const std::string& key, int n_players) {
  if (key.empty()) return 0;
  std::uint32_t mask = 0;
  int prev = 0;
  std::stringstream ss(key);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    int p = 0;
    try {
      size_t pos = 0;
      p = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw game_error("bad player id \"" + tok + "\" in payoff key \"" + key + "\"");
    }
    if (p < 1 || p > n_players)
      throw game_error("player id " + std::to_string(p) + " out of range in key \"" + key + "\"");
    if (p <= prev)
      throw game_error("payoff key \"" + key + "\" must list players in ascending order");
    prev = p;
    mask |= 1u << (p - 1);
  }
  if (mask == 0) throw game_error("empty payoff key must be \"\"");
  return mask;
}

inline std::string key_from_mask(std::uint32_t mask) {
  std::string key;
  for (int i = 0; i < 32; ++i) {
    if (!(mask & (1u << i))) continue;
    if (!key.empty()) key += ',';
    key += std::to_string(i + 1);
  }
  return key;
}

template <class T>
QuittingGame<T> game_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw game_error("game file must be a JSON object");
  if (!j.contains("players") || !j["players"].is_number_integer())
    throw game_error("game file needs an integer \"players\" field");
  const int n = j["players"].get<int>();
  if (n < 1 || n > 20)
    throw game_error("player count must be between 1 and 20");
  QuittingGame<T> game;
  game.n_players = n;
  game.default_vec.assign(n, T(0));
  game.shift.assign(n, T(0));
  if (!j.contains("payoffs") || !j["payoffs"].is_object())
    throw game_error("game file needs a \"payoffs\" object");
  for (const auto& [key, value] : j["payoffs"].items()) {
    const std::uint32_t mask = mask_from_key(key, n);
    if (!value.is_array() || static_cast<int>(value.size()) != n)
      throw game_error("payoff vector for \"" + key + "\" must have " + std::to_string(n) +
                       " entries");
    Vec<T> vec;
    for (const auto& entry : value) vec.push_back(scalar_from_json<T>(entry));
    game.payoffs[mask] = std::move(vec);
  }
  for (int i = 0; i < n; ++i)
    if (!game.payoffs.count(1u << i))
      throw game_error("missing payoff vector for player " + std::to_string(i + 1) +
                       " quitting alone");
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask)
    if (!game.payoffs.count(mask)) game.defaults_used = true;
  return game;
}

template <class T>
QuittingGame<T> load_game(const std::string& path) {
  return game_from_json<T>(read_json_file(path));
}

template <class T>
ordered_json game_to_json(const QuittingGame<T>& game) {
  ordered_json j;
  j["players"] = game.n_players;
  ordered_json payoffs = ordered_json::object();
  for (const auto& [mask, vec] : game.payoffs) payoffs[key_from_mask(mask)] = json_vec(vec);
  j["payoffs"] = payoffs;
  return j;
}

// --------------------------------------------------------------------------
// Matrices
// --------------------------------------------------------------------------

template <class T>
Mat<T> matrix_from_json(const nlohmann::json& j) {
  const nlohmann::json* rows = &j;
  if (j.is_object()) {
    if (!j.contains("matrix")) throw game_error("matrix file needs a \"matrix\" field");
    rows = &j["matrix"];
  }
  if (!rows->is_array() || rows->empty())
    throw game_error("matrix must be a non-empty array of rows");
  Mat<T> m;
  for (const auto& row : *rows) {
    if (!row.is_array() || row.size() != rows->size())
      throw game_error("matrix must be square");
    Vec<T> r;
    for (const auto& entry : row) r.push_back(scalar_from_json<T>(entry));
    m.push_back(std::move(r));
  }
  return m;
}

template <class T>
Mat<T> load_matrix(const std::string& path) {
  return matrix_from_json<T>(read_json_file(path));
}

// --------------------------------------------------------------------------
// Profiles
// --------------------------------------------------------------------------

template <class T>
SunspotProfile<T> profile_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw game_error("profile file must be a JSON object");
  SunspotProfile<T> prof;
  if (!j.contains("players") || !j["players"].is_number_integer())
    throw game_error("profile needs an integer \"players\" field");
  prof.players = j["players"].get<int>();
  if (prof.players < 1 || prof.players > 20)
    throw game_error("profile player count must be between 1 and 20");
  if (!j.contains("player_order") || !j["player_order"].is_array())
    throw game_error("profile needs a \"player_order\" array");
  std::set<int> seen;
  for (const auto& entry : j["player_order"]) {
    const int p = entry.get<int>();
    if (p < 1 || p > prof.players)
      throw game_error("player_order entry " + std::to_string(p) + " out of range");
    if (!seen.insert(p).second) throw game_error("player_order repeats a player");
    prof.player_order.push_back(p - 1);
  }
  const int n = static_cast<int>(prof.player_order.size());
  if (!j.contains("kiloblocks") || !j["kiloblocks"].is_array())
    throw game_error("profile needs a \"kiloblocks\" array");
  const int K = static_cast<int>(j["kiloblocks"].size());
  int index = 0;
  for (const auto& kj : j["kiloblocks"]) {
    Kiloblock<T> kb;
    if (!kj.contains("z") || !kj["z"].is_array() ||
        static_cast<int>(kj["z"].size()) != n + 1)
      throw game_error("kiloblock " + std::to_string(index) + ": \"z\" must have " +
                       std::to_string(n + 1) + " entries");
    T zsum(0);
    for (const auto& entry : kj["z"]) {
      T v = scalar_from_json<T>(entry);
      if (v < T(0)) throw game_error("kiloblock " + std::to_string(index) + ": negative z");
      zsum += v;
      kb.z.push_back(v);
    }
    if (std::abs(scalar_traits<T>::to_double(zsum) - 1.0) > 1e-9)
      throw game_error("kiloblock " + std::to_string(index) + ": z must sum to 1");
    if (kj.contains("lambda")) {
      if (!kj["lambda"].is_object())
        throw game_error("kiloblock " + std::to_string(index) + ": \"lambda\" must be an object");
      for (const auto& [key, value] : kj["lambda"].items()) {
        int t = 0;
        try {
          t = std::stoi(key);
        } catch (const std::exception&) {
          throw game_error("kiloblock " + std::to_string(index) + ": bad lambda key \"" + key +
                           "\"");
        }
        if (t < 1 || t > n)
          throw game_error("kiloblock " + std::to_string(index) + ": lambda type out of range");
        T v = scalar_from_json<T>(value);
        if (v < T(0) || v > T(1))
          throw game_error("kiloblock " + std::to_string(index) + ": lambda outside [0,1]");
        kb.lambda[t] = v;
      }
    }
    kb.block_len = kj.contains("block_len") ? kj["block_len"].get<long>() : 1;
    if (kb.block_len < 1)
      throw game_error("kiloblock " + std::to_string(index) + ": block_len must be >= 1");
    if (kj.contains("next")) {
      if (!kj["next"].is_object())
        throw game_error("kiloblock " + std::to_string(index) + ": \"next\" must be an object");
      for (const auto& [key, value] : kj["next"].items()) {
        int t = 0;
        try {
          t = std::stoi(key);
        } catch (const std::exception&) {
          throw game_error("kiloblock " + std::to_string(index) + ": bad next key \"" + key +
                           "\"");
        }
        if (t < 0 || t > n)
          throw game_error("kiloblock " + std::to_string(index) + ": next type out of range");
        const int succ = value.template get<int>();
        if (succ <= index || succ > K)
          throw game_error("kiloblock " + std::to_string(index) +
                           ": next must point to a later kiloblock (or " + std::to_string(K) +
                           " for the tail)");
        kb.next[t] = succ;
      }
    }
    prof.kiloblocks.push_back(std::move(kb));
    ++index;
  }
  prof.tail = j.value("tail", std::string("continue"));
  if (prof.tail != "continue")
    throw game_error("unsupported tail \"" + prof.tail + "\"");
  return prof;
}

template <class T>
SunspotProfile<T> load_profile(const std::string& path) {
  return profile_from_json<T>(read_json_file(path));
}

template <class T>
ordered_json profile_to_json(const SunspotProfile<T>& prof) {
  ordered_json j;
  j["players"] = prof.players;
  ordered_json order = ordered_json::array();
  for (int p : prof.player_order) order.push_back(p + 1);
  j["player_order"] = order;
  ordered_json blocks = ordered_json::array();
  for (const auto& kb : prof.kiloblocks) {
    ordered_json kj;
    kj["z"] = json_vec(kb.z);
    ordered_json lam = ordered_json::object();
    for (const auto& [t, v] : kb.lambda) lam[std::to_string(t)] = json_number(v);
    kj["lambda"] = lam;
    kj["block_len"] = kb.block_len;
    if (!kb.next.empty()) {
      ordered_json nx = ordered_json::object();
      for (const auto& [t, idx] : kb.next) nx[std::to_string(t)] = idx;
      kj["next"] = nx;
    }
    blocks.push_back(std::move(kj));
  }
  j["kiloblocks"] = blocks;
  j["tail"] = prof.tail;
  return j;
}

inline void save_json(const ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw game_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace quitting
