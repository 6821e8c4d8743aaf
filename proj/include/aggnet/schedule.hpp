#pragma once

// Slot-indexed transmission schedules with symbolic payloads, the
// communication-model validator and exact-once verification of the value
// delivered to the root.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aggnet/errors.hpp"
#include "aggnet/geometry.hpp"
#include "aggnet/graphs.hpp"
#include "aggnet/tradeoff.hpp"
#include "aggnet/trees.hpp"

namespace aggnet {

// A measurement Y_i or the value of one clique function.
struct Token {
  enum class Kind : std::uint8_t { measurement = 0, clique = 1 };
  Kind kind = Kind::measurement;
  std::int32_t id = 0;

  static Token measurement(NodeId i) { return {Kind::measurement, i}; }
  static Token clique(int c) { return {Kind::clique, c}; }

  auto operator<=>(const Token&) const = default;
};

inline std::string to_string(const Token& t) {
  return (t.kind == Token::Kind::measurement ? "m" : "c") + std::to_string(t.id);
}

struct Transmission {
  NodeId tx = kNoNode;
  NodeId rx = kNoNode;
  std::vector<Token> payload;
  bool retain = false;  // sender keeps its copy (raw measurement forwarding)
};

// The processor of a clique combines member measurements into a clique token
// at the end of `slot` (slot 0: before the first slot).
struct Computation {
  int slot = 0;
  NodeId node = kNoNode;
  int clique = 0;
  std::vector<NodeId> members;
};

enum class PayloadMode { sum, clique };

struct Schedule {
  int n = 0;
  NodeId root = 0;
  PayloadMode mode = PayloadMode::sum;
  std::vector<std::vector<Transmission>> slots;  // slots[s - 1] holds slot s
  std::vector<Computation> computations;

  // Index of the last nonempty slot; 0 when nothing is sent.
  int makespan() const {
    for (int s = static_cast<int>(slots.size()); s >= 1; --s)
      if (!slots[s - 1].empty()) return s;
    return 0;
  }

  std::size_t transmission_count() const {
    std::size_t c = 0;
    for (const auto& s : slots) c += s.size();
    return c;
  }

  std::vector<Transmission>& slot(int s) {
    if (static_cast<int>(slots.size()) < s) slots.resize(s);
    return slots[s - 1];
  }
};

inline double schedule_energy(const Schedule& s, const Deployment& dep, const EnergyParams& params) {
  std::vector<double> e;
  e.reserve(s.transmission_count());
  for (const auto& slot : s.slots)
    for (const auto& t : slot) e.push_back(edge_energy(dep, t.tx, t.rx, params));
  return pairwise_sum(e);
}

namespace detail {

// Per-node token multisets, applied slot by slot.
class TokenLedger {
 public:
  TokenLedger(const Schedule& s) : held_(s.n) {
    for (NodeId i = 0; i < s.n; ++i) held_[i].push_back(Token::measurement(i));
    for (const auto& c : s.computations)
      if (c.slot == 0) held_[c.node].push_back(Token::clique(c.clique));
  }

  std::vector<Token>& held(NodeId v) { return held_[v]; }

  // Removes `payload` from v. Returns the tokens that were missing.
  std::vector<Token> take(NodeId v, const std::vector<Token>& payload) {
    auto& h = held_[v];
    std::sort(h.begin(), h.end());
    std::vector<Token> want = payload;
    std::sort(want.begin(), want.end());
    std::vector<Token> rest, missing;
    std::size_t a = 0, b = 0;
    while (a < h.size() || b < want.size()) {
      if (b == want.size() || (a < h.size() && h[a] < want[b])) {
        rest.push_back(h[a++]);
      } else if (a == h.size() || want[b] < h[a]) {
        missing.push_back(want[b++]);
      } else {
        ++a;
        ++b;
      }
    }
    h = std::move(rest);
    return missing;
  }

  bool holds(NodeId v, const std::vector<Token>& payload) {
    auto h = held_[v];
    return take_copy(h, payload);
  }

  void give(NodeId v, const std::vector<Token>& tokens) {
    held_[v].insert(held_[v].end(), tokens.begin(), tokens.end());
  }

 private:
  static bool take_copy(std::vector<Token> h, std::vector<Token> want) {
    std::sort(h.begin(), h.end());
    std::sort(want.begin(), want.end());
    return std::includes(h.begin(), h.end(), want.begin(), want.end());
  }

  std::vector<std::vector<Token>> held_;
};

inline bool forwardable(PayloadMode mode, const Token& t) {
  return mode == PayloadMode::sum || t.kind == Token::Kind::clique;
}

// Simulates the schedule; transmissions in slots >= from_slot get a payload
// of everything the sender may forward at that moment. Earlier slots keep
// their explicit payloads.
inline void derive_payloads(Schedule& s, int from_slot) {
  TokenLedger ledger(s);
  for (int si = 1; si <= static_cast<int>(s.slots.size()); ++si) {
    auto& slot = s.slots[si - 1];
    if (si >= from_slot) {
      for (auto& t : slot) {
        t.payload.clear();
        for (const auto& tok : ledger.held(t.tx))
          if (forwardable(s.mode, tok)) t.payload.push_back(tok);
        std::sort(t.payload.begin(), t.payload.end());
      }
    }
    std::vector<std::pair<NodeId, std::vector<Token>>> arriving;
    for (const auto& t : slot) {
      if (!t.retain) ledger.take(t.tx, t.payload);
      arriving.emplace_back(t.rx, t.payload);
    }
    for (auto& [v, toks] : arriving) ledger.give(v, toks);
    for (const auto& c : s.computations)
      if (c.slot == si) ledger.give(c.node, {Token::clique(c.clique)});
  }
}

}  // namespace detail

// Children transmit in order of descending subtree latency: the rank-i
// child sends i slots before its parent's own deadline. Makespan equals
// tree_latency(t).
inline Schedule schedule_tree(const AggregationTree& t) {
  const auto lat = subtree_latencies(t);
  const auto order = tree_bfs_order(t);
  auto ch = t.children();
  Schedule s;
  s.n = t.n;
  s.root = t.root;
  s.slots.resize(lat[t.root]);
  std::vector<int> deadline(t.n, 0);
  deadline[t.root] = lat[t.root] + 1;
  for (NodeId v : order) {
    auto& kids = ch[v];
    std::sort(kids.begin(), kids.end(), [&](NodeId a, NodeId b) {
      return lat[a] != lat[b] ? lat[a] > lat[b] : a < b;
    });
    for (std::size_t r = 0; r < kids.size(); ++r) {
      const int slot = deadline[v] - static_cast<int>(r) - 1;
      deadline[kids[r]] = slot;
      s.slot(slot).push_back({kids[r], v, {}, false});
    }
  }
  detail::derive_payloads(s, 1);
  return s;
}

namespace detail {

// Lays the plan out from slot offset+1: repairs first, one slot each, then
// level windows deepest first. A level-k path's hops are right-aligned to
// the end of its window of width 1 + w_k.
inline void layout_plan(const AggregationPlan& plan, Schedule& s, int offset) {
  int next = offset + 1;
  for (const auto& r : plan.repairs) s.slot(next++).push_back({r.node, r.target, {}, false});
  for (int k = plan.iterations() - 1; k >= 0; --k) {
    const int width = 1 + plan.weights.w[k];
    const int end = next + width - 1;
    s.slot(end);
    // paths of one level share the window, so they must be node-disjoint
    std::vector<int> seen(plan.n, -1);
    for (std::size_t pi = 0; pi < plan.levels[k].size(); ++pi) {
      const auto& p = plan.levels[k][pi];
      if (p.hops() < 1 || p.hops() > width)
        throw schedule_conflict("level " + std::to_string(k) + " path exceeds its window");
      for (NodeId v : p.nodes) {
        if (seen[v] >= 0)
          throw schedule_conflict("node " + std::to_string(v) + " appears on two level-" +
                                  std::to_string(k) + " paths");
        seen[v] = static_cast<int>(pi);
      }
      const int first = end - p.hops() + 1;
      for (int h = 0; h < p.hops(); ++h)
        s.slot(first + h).push_back({p.nodes[h], p.nodes[h + 1], {}, false});
    }
    next = end + 1;
  }
}

}  // namespace detail

inline Schedule schedule_plan(const AggregationPlan& plan) {
  Schedule s;
  s.n = plan.n;
  s.root = plan.root;
  detail::layout_plan(plan, s, 0);
  detail::derive_payloads(s, 1);
  return s;
}

struct Violation {
  enum class Kind { half_duplex, multiple_reception, multiple_transmission, causality, invalid_link };
  Kind kind;
  int slot = 0;
  std::vector<NodeId> nodes;
  std::string detail;
};

inline const char* to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::half_duplex: return "half-duplex";
    case Violation::Kind::multiple_reception: return "multiple-reception";
    case Violation::Kind::multiple_transmission: return "multiple-transmission";
    case Violation::Kind::causality: return "causality";
    case Violation::Kind::invalid_link: return "invalid-link";
  }
  return "?";
}

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks the communication model slot by slot: no node both sends and
// receives, no node receives or sends twice, and every payload token is
// held by the sender at the end of the previous slot.
inline ValidationReport validate_schedule(const Schedule& s, const Deployment& dep) {
  ValidationReport rep;
  if (s.n != dep.n) {
    rep.violations.push_back({Violation::Kind::invalid_link, 0, {}, "schedule and deployment sizes differ"});
    return rep;
  }
  detail::TokenLedger ledger(s);
  std::vector<int> tx_count(s.n, 0), rx_count(s.n, 0);
  for (int si = 1; si <= static_cast<int>(s.slots.size()); ++si) {
    const auto& slot = s.slots[si - 1];
    bool links_ok = true;
    for (const auto& t : slot)
      if (t.tx < 0 || t.tx >= s.n || t.rx < 0 || t.rx >= s.n || t.tx == t.rx) {
        rep.violations.push_back({Violation::Kind::invalid_link, si, {t.tx, t.rx}, "bad endpoints"});
        links_ok = false;
      }
    if (!links_ok) continue;
    for (const auto& t : slot) {
      ++tx_count[t.tx];
      ++rx_count[t.rx];
    }
    for (const auto& t : slot) {
      for (NodeId v : {t.tx, t.rx}) {
        if (tx_count[v] == 0 && rx_count[v] == 0) continue;  // already reported
        if (tx_count[v] > 0 && rx_count[v] > 0)
          rep.violations.push_back({Violation::Kind::half_duplex, si, {v}, "node sends and receives"});
        if (rx_count[v] > 1)
          rep.violations.push_back({Violation::Kind::multiple_reception, si, {v}, "node receives " + std::to_string(rx_count[v]) + " messages"});
        if (tx_count[v] > 1)
          rep.violations.push_back({Violation::Kind::multiple_transmission, si, {v}, "node sends " + std::to_string(tx_count[v]) + " messages"});
        tx_count[v] = rx_count[v] = 0;
      }
    }
    std::vector<std::pair<NodeId, const std::vector<Token>*>> arriving;
    for (const auto& t : slot) {
      std::vector<Token> missing;
      if (t.retain) {
        if (!ledger.holds(t.tx, t.payload)) missing = t.payload;
      } else {
        missing = ledger.take(t.tx, t.payload);
      }
      if (!missing.empty()) {
        std::string what = "sender lacks";
        for (const auto& m : missing) what += " " + to_string(m);
        rep.violations.push_back({Violation::Kind::causality, si, {t.tx, t.rx}, what});
      }
      arriving.emplace_back(t.rx, &t.payload);
    }
    for (auto& [v, toks] : arriving) ledger.give(v, *toks);
    for (const auto& c : s.computations)
      if (c.slot == si) ledger.give(c.node, {Token::clique(c.clique)});
  }
  return rep;
}

struct VerificationReport {
  std::vector<std::string> failures;
  bool passed() const { return failures.empty(); }
};

// Sum mode: the root ends with every measurement exactly once.
// Clique mode: every processor holds all member measurements when it
// computes, and the root ends with every clique value exactly once.
inline VerificationReport verify_aggregate(const Schedule& s, const CliqueSet& cliques, NodeId root) {
  VerificationReport rep;
  detail::TokenLedger ledger(s);
  std::vector<int> computed(cliques.size(), 0);
  for (const auto& c : s.computations) {
    if (c.clique < 0 || c.clique >= static_cast<int>(cliques.size())) {
      rep.failures.push_back("computation references unknown clique " + std::to_string(c.clique));
      continue;
    }
    ++computed[c.clique];
  }
  auto check_computations = [&](int slot) {
    for (const auto& c : s.computations) {
      if (c.slot != slot || c.clique < 0 || c.clique >= static_cast<int>(cliques.size())) continue;
      std::vector<Token> need;
      for (NodeId v : cliques.cliques[c.clique]) need.push_back(Token::measurement(v));
      if (!ledger.holds(c.node, need))
        rep.failures.push_back("processor " + std::to_string(c.node) + " lacks member data of clique " +
                               std::to_string(c.clique) + " at slot " + std::to_string(slot));
    }
  };
  check_computations(0);
  for (int si = 1; si <= static_cast<int>(s.slots.size()); ++si) {
    const auto& slot = s.slots[si - 1];
    std::vector<std::pair<NodeId, const std::vector<Token>*>> arriving;
    for (const auto& t : slot) {
      if (t.tx < 0 || t.tx >= s.n || t.rx < 0 || t.rx >= s.n) continue;
      if (!t.retain) ledger.take(t.tx, t.payload);
      arriving.emplace_back(t.rx, &t.payload);
    }
    for (auto& [v, toks] : arriving) ledger.give(v, *toks);
    check_computations(si);
    for (const auto& c : s.computations)
      if (c.slot == si) ledger.give(c.node, {Token::clique(c.clique)});
  }

  std::map<Token, int> at_root;
  for (const auto& tok : ledger.held(root)) ++at_root[tok];
  if (s.mode == PayloadMode::sum) {
    for (NodeId i = 0; i < s.n; ++i) {
      int m = at_root.count(Token::measurement(i)) ? at_root[Token::measurement(i)] : 0;
      if (m != 1)
        rep.failures.push_back("measurement of node " + std::to_string(i) + " reaches the root " +
                               std::to_string(m) + " times");
    }
    for (const auto& [tok, m] : at_root)
      if (tok.kind == Token::Kind::clique)
        rep.failures.push_back("unexpected clique token " + to_string(tok) + " in sum mode");
  } else {
    for (int c = 0; c < static_cast<int>(cliques.size()); ++c) {
      if (computed[c] != 1)
        rep.failures.push_back("clique " + std::to_string(c) + " computed " + std::to_string(computed[c]) + " times");
      int m = at_root.count(Token::clique(c)) ? at_root[Token::clique(c)] : 0;
      if (m != 1)
        rep.failures.push_back("value of clique " + std::to_string(c) + " reaches the root " +
                               std::to_string(m) + " times");
    }
  }
  return rep;
}

// Text format:
//   # aggnet schedule v1
//   n <count>
//   root <id>
//   mode sum|clique
//   compute <slot> <node> <clique> : <members...>
//   <slot> <tx> <rx> [: <tokens...>] [+]
// Tokens are m<id> (measurement) or c<id> (clique value); a trailing '+'
// marks a sender that keeps its copy. When no transmission line carries a
// payload section, payloads are derived by forwarding everything held.
inline void write_schedule(std::ostream& out, const Schedule& s, bool with_payloads = true) {
  out << "# aggnet schedule v1\nn " << s.n << "\nroot " << s.root << "\nmode "
      << (s.mode == PayloadMode::sum ? "sum" : "clique") << '\n';
  for (const auto& c : s.computations) {
    out << "compute " << c.slot << ' ' << c.node << ' ' << c.clique << " :";
    for (NodeId v : c.members) out << ' ' << v;
    out << '\n';
  }
  for (int si = 1; si <= static_cast<int>(s.slots.size()); ++si)
    for (const auto& t : s.slots[si - 1]) {
      out << si << ' ' << t.tx << ' ' << t.rx;
      if (with_payloads) {
        out << " :";
        for (const auto& tok : t.payload) out << ' ' << to_string(tok);
      }
      if (t.retain) out << " +";
      out << '\n';
    }
}

inline Token parse_token(std::string_view s) {
  if (s.size() < 2 || (s[0] != 'm' && s[0] != 'c')) throw invalid_input("bad token '" + std::string(s) + "'");
  auto id = text::parse_number<std::int32_t>(s.substr(1), "token id");
  return s[0] == 'm' ? Token::measurement(id) : Token::clique(id);
}

inline Schedule read_schedule(std::istream& in) {
  Schedule s;
  s.n = -1;
  std::string line;
  bool any_payload = false;
  while (text::next_record(in, line)) {
    auto tok = text::split_ws(line);
    if (tok[0] == "n" && tok.size() == 2) {
      s.n = text::parse_number<int>(tok[1], "n");
    } else if (tok[0] == "root" && tok.size() == 2) {
      s.root = text::parse_number<NodeId>(tok[1], "root");
    } else if (tok[0] == "mode" && tok.size() == 2) {
      if (tok[1] == "sum") s.mode = PayloadMode::sum;
      else if (tok[1] == "clique") s.mode = PayloadMode::clique;
      else throw invalid_input("unknown schedule mode " + std::string(tok[1]));
    } else if (tok[0] == "compute") {
      if (tok.size() < 5 || tok[4] != ":") throw invalid_input("bad compute record: " + line);
      Computation c;
      c.slot = text::parse_number<int>(tok[1], "slot");
      c.node = text::parse_number<NodeId>(tok[2], "node");
      c.clique = text::parse_number<int>(tok[3], "clique");
      for (std::size_t i = 5; i < tok.size(); ++i) c.members.push_back(text::parse_number<NodeId>(tok[i], "member"));
      s.computations.push_back(std::move(c));
    } else {
      if (tok.size() < 3) throw invalid_input("bad transmission record: " + line);
      int slot = text::parse_number<int>(tok[0], "slot");
      if (slot < 1) throw invalid_input("slots are 1-based: " + line);
      Transmission t;
      t.tx = text::parse_number<NodeId>(tok[1], "tx");
      t.rx = text::parse_number<NodeId>(tok[2], "rx");
      std::size_t i = 3;
      if (i < tok.size() && tok[i] == ":") {
        any_payload = true;
        for (++i; i < tok.size() && tok[i] != "+"; ++i) t.payload.push_back(parse_token(tok[i]));
      }
      if (i < tok.size() && tok[i] == "+") {
        t.retain = true;
        ++i;
      }
      if (i != tok.size()) throw invalid_input("trailing fields in transmission record: " + line);
      s.slot(slot).push_back(std::move(t));
    }
  }
  if (s.n < 1) throw invalid_input("schedule header lacks n");
  if (!any_payload) detail::derive_payloads(s, 1);
  return s;
}

inline void write_report(std::ostream& out, const ValidationReport& rep) {
  out << "violations " << rep.violations.size() << '\n';
  for (const auto& v : rep.violations) {
    out << to_string(v.kind) << " slot=" << v.slot << " nodes=";
    for (std::size_t i = 0; i < v.nodes.size(); ++i) out << (i ? "," : "") << v.nodes[i];
    out << " " << v.detail << '\n';
  }
}

inline void write_report(std::ostream& out, const VerificationReport& rep) {
  out << "verification " << (rep.passed() ? "pass" : "fail") << '\n';
  for (const auto& f : rep.failures) out << "failure " << f << '\n';
}

}  // namespace aggnet
