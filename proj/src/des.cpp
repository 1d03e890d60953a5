#include "socsim/des.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Dense>

#include "socsim/error.hpp"
#include "socsim/random.hpp"

namespace socsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Component {
  std::map<std::string, int> index;
  std::map<std::pair<int, std::string>, int> delta;
  std::set<std::string> alphabet;
};

Component index_component(const PlayerFSA& f) {
  Component c;
  for (std::size_t i = 0; i < f.states.size(); ++i) c.index[f.states[i]] = static_cast<int>(i);
  for (const auto& t : f.transitions) {
    c.delta[{c.index.at(t.from), t.event}] = c.index.at(t.to);
    c.alphabet.insert(t.event);
  }
  return c;
}

// Controllers in sorted order and, per state, their enabled controllable events.
std::vector<std::vector<int>> enabled_by_controller(const GameModel& m, int s, const std::vector<std::string>& ctl) {
  std::vector<std::vector<int>> out(ctl.size());
  for (const auto& t : m.out(s)) {
    const EventSpec& e = m.events[t.event];
    if (e.cls != EventClass::Controllable) continue;
    const auto it = std::find(ctl.begin(), ctl.end(), e.owner);
    auto& list = out[it - ctl.begin()];
    if (std::find(list.begin(), list.end(), t.event) == list.end()) list.push_back(t.event);
  }
  for (auto& l : out) std::sort(l.begin(), l.end());
  return out;
}

}  // namespace

std::string GameModel::state_name(int s) const {
  std::string out;
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (i) out += ",";
    out += components[i] + "=" + state_labels[s][i];
  }
  return out;
}

std::vector<std::string> GameModel::controllers() const {
  std::set<std::string> owners;
  for (const auto& e : events)
    if (e.cls == EventClass::Controllable) owners.insert(e.owner);
  return {owners.begin(), owners.end()};
}

std::vector<GameModel::Transition> GameModel::out(int s) const {
  std::vector<Transition> r;
  for (const auto& t : transitions)
    if (t.from == s) r.push_back(t);
  return r;
}

void validate(const EventSpec& e) {
  if (e.name.empty()) throw ConfigError("event without a name");
  if (!(e.rate > 0.0) || !std::isfinite(e.rate)) throw ConfigError("event '" + e.name + "': rate must be > 0");
  if (e.cls == EventClass::Controllable && e.owner.empty())
    throw ConfigError("controllable event '" + e.name + "' needs an owner");
}

void validate(const PlayerFSA& f) {
  const std::string where = "player '" + f.name + "': ";
  std::set<std::string> states(f.states.begin(), f.states.end());
  if (states.size() != f.states.size()) throw ConfigError(where + "duplicate state names");
  if (!states.count(f.initial)) throw ConfigError(where + "initial state not declared");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : f.transitions) {
    if (!states.count(t.from) || !states.count(t.to)) throw ConfigError(where + "transition between undeclared states");
    if (!seen.insert({t.from, t.event}).second)
      throw ConfigError(where + "event '" + t.event + "' is not deterministic in state '" + t.from + "'");
  }
  std::set<std::string> reach{f.initial};
  std::deque<std::string> q{f.initial};
  while (!q.empty()) {
    const std::string s = q.front();
    q.pop_front();
    for (const auto& t : f.transitions)
      if (t.from == s && reach.insert(t.to).second) q.push_back(t.to);
  }
  if (reach.size() != states.size()) throw ConfigError(where + "has states unreachable from the initial state");
}

GameModel compose(const std::vector<PlayerFSA>& fsas, const std::vector<EventSpec>& events, const SyncTable& sync,
                  const std::vector<std::map<std::string, std::string>>& marked) {
  GameModel m;
  m.events = events;
  std::map<std::string, int> event_index;
  for (std::size_t i = 0; i < events.size(); ++i) {
    validate(events[i]);
    if (!event_index.emplace(events[i].name, static_cast<int>(i)).second)
      throw ConfigError("duplicate event '" + events[i].name + "'");
  }
  std::vector<Component> comps;
  std::map<std::string, int> comp_index;
  for (const auto& f : fsas) {
    validate(f);
    for (const auto& t : f.transitions)
      if (!event_index.count(t.event)) throw ConfigError("player '" + f.name + "' uses undeclared event '" + t.event + "'");
    if (!comp_index.emplace(f.name, static_cast<int>(comps.size())).second)
      throw ConfigError("duplicate player '" + f.name + "'");
    comps.push_back(index_component(f));
    m.components.push_back(f.name);
  }
  for (const auto& e : events)
    if (e.cls == EventClass::Controllable && !comp_index.count(e.owner))
      throw ConfigError("event '" + e.name + "' owned by unknown player '" + e.owner + "'");

  std::map<int, std::vector<int>> shared;  // event → participating components
  for (const auto& [name, parts] : sync) {
    auto e = event_index.find(name);
    if (e == event_index.end()) throw ConfigError("sync table names undeclared event '" + name + "'");
    for (const auto& p : parts) {
      auto c = comp_index.find(p);
      if (c == comp_index.end()) throw ConfigError("sync table names unknown player '" + p + "'");
      if (!comps[c->second].alphabet.count(name))
        throw ConfigError("sync event '" + name + "' absent from player '" + p + "'");
      shared[e->second].push_back(c->second);
    }
  }
  for (const auto& mk : marked)
    for (const auto& [comp, state] : mk) {
      auto c = comp_index.find(comp);
      if (c == comp_index.end() || !comps[c->second].index.count(state))
        throw ConfigError("marked assignment names unknown " + comp + "=" + state);
    }

  std::map<std::vector<int>, int> ids;
  std::vector<std::vector<int>> tuples;
  std::deque<int> queue;
  auto intern = [&](const std::vector<int>& t) {
    auto [it, fresh] = ids.emplace(t, static_cast<int>(tuples.size()));
    if (fresh) {
      tuples.push_back(t);
      queue.push_back(it->second);
    }
    return it->second;
  };
  std::vector<int> init;
  for (std::size_t i = 0; i < fsas.size(); ++i) init.push_back(comps[i].index.at(fsas[i].initial));
  m.initial = intern(init);

  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    const std::vector<int> cur = tuples[s];
    for (std::size_t e = 0; e < events.size(); ++e) {
      const std::string& name = events[e].name;
      if (auto sh = shared.find(static_cast<int>(e)); sh != shared.end()) {
        std::vector<int> next = cur;
        bool ok = true;
        for (int c : sh->second) {
          auto d = comps[c].delta.find({cur[c], name});
          if (d == comps[c].delta.end()) {
            ok = false;
            break;
          }
          next[c] = d->second;
        }
        if (ok) {
          const int to = intern(next);
          m.transitions.push_back({s, static_cast<int>(e), to});
        }
        continue;
      }
      for (std::size_t c = 0; c < comps.size(); ++c) {
        auto d = comps[c].delta.find({cur[c], name});
        if (d == comps[c].delta.end()) continue;
        std::vector<int> next = cur;
        next[c] = d->second;
        const int to = intern(next);
        m.transitions.push_back({s, static_cast<int>(e), to});
      }
    }
  }

  for (const auto& t : tuples) {
    std::vector<std::string> labels;
    for (std::size_t c = 0; c < t.size(); ++c) labels.push_back(fsas[c].states[t[c]]);
    m.state_labels.push_back(labels);
    bool is_marked = false;
    for (const auto& mk : marked) {
      bool all = true;
      for (const auto& [comp, state] : mk)
        if (labels[comp_index.at(comp)] != state) all = false;
      if (all) is_marked = true;
    }
    m.marked.push_back(is_marked);
  }
  return m;
}

std::vector<MarkingViolation> validate_marking(const GameModel& m) {
  std::vector<MarkingViolation> out;
  for (const auto& t : m.transitions)
    if (m.marked[t.from] && !m.marked[t.to]) out.push_back({t.from, t.event, t.to});
  return out;
}

std::vector<std::vector<int>> control_options(const GameModel& m, int s) {
  const auto ctl = m.controllers();
  const auto enabled = enabled_by_controller(m, s, ctl);
  std::vector<std::vector<int>> out{std::vector<int>(ctl.size(), -1)};
  for (std::size_t c = 0; c < ctl.size(); ++c) {
    if (enabled[c].empty()) continue;
    std::vector<std::vector<int>> next;
    for (const auto& partial : out) {
      for (int e : enabled[c]) {
        auto o = partial;
        o[c] = e;
        next.push_back(std::move(o));
      }
      next.push_back(partial);
    }
    out = std::move(next);
  }
  return out;
}

Outflow outflow(const GameModel& m, int s, const std::vector<int>& config) {
  Outflow f;
  for (const auto& t : m.out(s)) {
    const EventSpec& e = m.events[t.event];
    if (e.cls == EventClass::Controllable && std::find(config.begin(), config.end(), t.event) == config.end()) continue;
    f.rate += e.rate;
    f.to.emplace_back(t.to, e.rate);
  }
  return f;
}

Solution solve_policy(const GameModel& m, double tol, int max_sweeps) {
  const int n = m.size();
  std::vector<std::vector<std::vector<int>>> options(n);
  std::vector<std::vector<Outflow>> flows(n);
  for (int s = 0; s < n; ++s) {
    options[s] = control_options(m, s);
    for (const auto& o : options[s]) flows[s].push_back(outflow(m, s, o));
  }

  // Largest set from which some policy reaches the marked set with probability one.
  std::vector<bool> in(n, true);
  std::vector<std::vector<bool>> safe(n);
  for (;;) {
    for (int s = 0; s < n; ++s) {
      safe[s].assign(flows[s].size(), false);
      for (std::size_t a = 0; a < flows[s].size(); ++a) {
        if (flows[s][a].rate <= 0.0) continue;
        bool ok = true;
        for (const auto& [j, r] : flows[s][a].to)
          if (!in[j]) ok = false;
        safe[s][a] = ok;
      }
    }
    std::vector<bool> reach(n, false);
    for (int s = 0; s < n; ++s) reach[s] = m.marked[s] && in[s];
    for (bool grew = true; grew;) {
      grew = false;
      for (int s = 0; s < n; ++s) {
        if (reach[s] || !in[s]) continue;
        for (std::size_t a = 0; a < flows[s].size() && !reach[s]; ++a) {
          if (!safe[s][a]) continue;
          for (const auto& [j, r] : flows[s][a].to)
            if (reach[j]) {
              reach[s] = grew = true;
              break;
            }
        }
      }
    }
    if (reach == in) break;
    in = reach;
  }

  Solution sol;
  sol.values.assign(n, 0.0);
  sol.infinite.assign(n, false);
  double lambda = 0.0;
  for (int s = 0; s < n; ++s) {
    if (!in[s]) {
      sol.values[s] = kInf;
      sol.infinite[s] = true;
      continue;
    }
    if (m.marked[s]) continue;
    for (std::size_t a = 0; a < flows[s].size(); ++a)
      if (safe[s][a]) lambda = std::max(lambda, flows[s][a].rate);
  }
  sol.uniformization_rate = lambda;

  auto backup = [&](int s, const std::vector<double>& v, std::size_t a) {
    const Outflow& f = flows[s][a];
    double acc = 1.0 / lambda + (1.0 - f.rate / lambda) * v[s];
    for (const auto& [j, r] : f.to) acc += r / lambda * v[j];
    return acc;
  };

  auto& v = sol.values;
  if (lambda > 0.0) {
    for (sol.sweeps = 0; sol.sweeps < max_sweeps;) {
      double residual = 0.0;
      for (int s = 0; s < n; ++s) {
        if (!in[s] || m.marked[s]) continue;
        double best = kInf;
        for (std::size_t a = 0; a < flows[s].size(); ++a)
          if (safe[s][a]) best = std::min(best, backup(s, v, a));
        residual = std::max(residual, std::abs(best - v[s]));
        v[s] = best;
      }
      ++sol.sweeps;
      double vmax = 0.0;
      for (int s = 0; s < n; ++s)
        if (in[s]) vmax = std::max(vmax, v[s]);
      sol.residual = residual;
      // Remaining error is at most the residual times the expected number of uniformized steps.
      if (residual * (1.0 + lambda * vmax) <= tol) {
        sol.converged = true;
        break;
      }
    }
  } else {
    sol.converged = true;
  }

  sol.policy.choice.resize(n);
  for (int s = 0; s < n; ++s) {
    sol.policy.choice[s] = options[s].front();
    if (!in[s] || m.marked[s] || lambda <= 0.0) continue;
    double best = kInf;
    std::size_t arg = 0;
    for (std::size_t a = 0; a < flows[s].size(); ++a) {
      if (!safe[s][a]) continue;
      const double q = backup(s, v, a);
      if (best == kInf || q < best - 1e-12 * std::max(1.0, std::abs(best))) {
        best = q;
        arg = a;
      }
    }
    sol.policy.choice[s] = options[s][arg];
  }
  return sol;
}

std::vector<double> evaluate_policy(const GameModel& m, const Policy& p) {
  const int n = m.size();
  std::vector<Outflow> f(n);
  for (int s = 0; s < n; ++s) f[s] = outflow(m, s, p.choice[s]);

  // States that can reach the marked set at all.
  std::vector<bool> reach(n, false);
  for (int s = 0; s < n; ++s) reach[s] = m.marked[s];
  for (bool grew = true; grew;) {
    grew = false;
    for (int s = 0; s < n; ++s) {
      if (reach[s] || m.marked[s]) continue;
      for (const auto& [j, r] : f[s].to)
        if (reach[j]) {
          reach[s] = grew = true;
          break;
        }
    }
  }
  // Sure reachability: no path into a state that cannot reach.
  std::vector<bool> doomed(n, false);
  for (int s = 0; s < n; ++s) doomed[s] = !reach[s];
  for (bool grew = true; grew;) {
    grew = false;
    for (int s = 0; s < n; ++s) {
      if (doomed[s] || m.marked[s]) continue;
      for (const auto& [j, r] : f[s].to)
        if (doomed[j]) {
          doomed[s] = grew = true;
          break;
        }
    }
  }

  std::vector<int> idx(n, -1);
  int k = 0;
  for (int s = 0; s < n; ++s)
    if (!doomed[s] && !m.marked[s]) idx[s] = k++;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(k);
  for (int s = 0; s < n; ++s) {
    if (idx[s] < 0) continue;
    a(idx[s], idx[s]) += f[s].rate;
    for (const auto& [j, r] : f[s].to)
      if (idx[j] >= 0) a(idx[s], idx[j]) -= r;
  }
  const Eigen::VectorXd x = k > 0 ? Eigen::VectorXd(a.partialPivLu().solve(b)) : Eigen::VectorXd();
  std::vector<double> out(n, 0.0);
  for (int s = 0; s < n; ++s) {
    if (doomed[s]) out[s] = kInf;
    else if (idx[s] >= 0) out[s] = x(idx[s]);
  }
  return out;
}

DesSamples simulate_des(const GameModel& m, const Policy& p, std::uint64_t seed, int episodes, double horizon,
                        std::optional<int> start) {
  const int n = m.size();
  std::vector<Outflow> f(n);
  for (int s = 0; s < n; ++s) f[s] = outflow(m, s, p.choice[s]);
  DesSamples out;
  out.times.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    Rng rng(child_seed(seed, static_cast<std::uint64_t>(e)));
    int s = start.value_or(m.initial);
    double t = 0.0;
    bool censored = false;
    while (!m.marked[s]) {
      if (f[s].rate <= 0.0) {
        censored = true;
        break;
      }
      t += rng.exponential(f[s].rate);
      if (t > horizon) {
        censored = true;
        break;
      }
      double u = rng.uniform(0.0, f[s].rate);
      int next = f[s].to.back().first;
      for (const auto& [j, r] : f[s].to) {
        if (u < r) {
          next = j;
          break;
        }
        u -= r;
      }
      s = next;
    }
    if (censored) ++out.censored;
    else out.times.push_back(t);
  }
  return out;
}

ExportResult export_policy(const GameModel& m, const Policy& p, const ExportSpec& spec) {
  ExportResult res;
  const auto ctl = m.controllers();
  std::set<std::string> warned;
  auto warn = [&](const std::string& w) {
    if (warned.insert(w).second) res.warnings.push_back(w);
  };

  struct Tally {
    std::vector<std::string> ops;  // first-seen order
    std::map<std::string, int> count;
  };
  std::vector<std::pair<std::string, std::string>> order;  // (role, condition)
  std::map<std::pair<std::string, std::string>, Tally> tallies;

  for (int s = 0; s < m.size(); ++s) {
    if (m.marked[s]) continue;
    for (std::size_t c = 0; c < ctl.size(); ++c) {
      const int e = p.choice[s][c];
      if (e < 0) continue;
      const std::string& player = ctl[c];
      const std::string& ev = m.events[e].name;
      auto role = spec.player_roles.find(player);
      auto hint = spec.events.find(ev);
      const auto comp = std::find(m.components.begin(), m.components.end(), player);
      if (role == spec.player_roles.end() || hint == spec.events.end() || comp == m.components.end()) {
        warn("no mapping for event '" + ev + "' of player '" + player + "'");
        continue;
      }
      const std::string& label = m.state_labels[s][comp - m.components.begin()];
      auto conds = spec.state_conditions.find(player);
      if (conds == spec.state_conditions.end() || !conds->second.count(label)) {
        warn("no condition for state '" + label + "' of player '" + player + "'");
        continue;
      }
      std::string cond = conds->second.at(label);
      if (!hint->second.requires_.empty()) cond = cond == "true" ? hint->second.requires_ : cond + " && " + hint->second.requires_;
      const auto key = std::make_pair(role->second, cond);
      auto [it, fresh] = tallies.try_emplace(key);
      if (fresh) order.push_back(key);
      if (!it->second.count.count(hint->second.op)) it->second.ops.push_back(hint->second.op);
      ++it->second.count[hint->second.op];
    }
  }

  res.fragment = nlohmann::json::object();
  for (const auto& key : order) {
    const Tally& t = tallies.at(key);
    std::string best = t.ops.front();
    for (const auto& op : t.ops)
      if (t.count.at(op) > t.count.at(best)) best = op;
    res.fragment[key.first].push_back({{"when", key.second}, {"then", best}});
  }
  return res;
}

ModelDocument parse_model(const nlohmann::json& j) {
  ModelDocument d;
  try {
    if (!j.is_object() || !j.contains("players") || !j.contains("events"))
      throw ConfigError("DES model needs 'players' and 'events'");
    for (const auto& pj : j.at("players")) {
      PlayerFSA f;
      f.name = pj.at("name").get<std::string>();
      f.states = pj.at("states").get<std::vector<std::string>>();
      f.initial = pj.at("initial").get<std::string>();
      for (const auto& t : pj.value("transitions", nlohmann::json::array())) {
        if (!t.is_array() || t.size() != 3) throw ConfigError("player '" + f.name + "': transitions are [from, event, to]");
        f.transitions.push_back({t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()});
      }
      d.players.push_back(std::move(f));
    }
    for (const auto& ej : j.at("events")) {
      EventSpec e;
      e.name = ej.at("name").get<std::string>();
      const std::string cls = ej.at("class").get<std::string>();
      if (cls == "controllable") e.cls = EventClass::Controllable;
      else if (cls == "uncontrollable") e.cls = EventClass::Uncontrollable;
      else throw ConfigError("event '" + e.name + "': class must be controllable or uncontrollable");
      e.rate = ej.at("rate").get<double>();
      e.owner = ej.value("owner", std::string());
      validate(e);
      d.events.push_back(std::move(e));
    }
    if (j.contains("sync"))
      for (const auto& [name, parts] : j.at("sync").items()) d.sync[name] = parts.get<std::vector<std::string>>();
    if (j.contains("marked"))
      for (const auto& mk : j.at("marked")) d.marked.push_back(mk.get<std::map<std::string, std::string>>());
    if (j.contains("export")) {
      const auto& x = j.at("export");
      if (x.contains("roles")) d.export_spec.player_roles = x.at("roles").get<std::map<std::string, std::string>>();
      if (x.contains("states"))
        d.export_spec.state_conditions = x.at("states").get<std::map<std::string, std::map<std::string, std::string>>>();
      if (x.contains("events"))
        for (const auto& [name, h] : x.at("events").items())
          d.export_spec.events[name] = {h.at("operator").get<std::string>(), h.value("requires", std::string())};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("DES model: ") + e.what());
  }
  return d;
}

GameModel build_model(const ModelDocument& d) { return compose(d.players, d.events, d.sync, d.marked); }

}  // namespace socsim
