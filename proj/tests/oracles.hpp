#pragma once

// Independent reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <functional>
#include <set>
#include <vector>

#include "qps/circuit.hpp"

namespace oracle {

struct PathSets {
  std::set<std::size_t> diamond;
  std::set<std::size_t> leaking;
};

// Enumerates every path of light from the input modes to the outputs by
// following each mode's timeline in the raw layout. A cell is in the diamond
// when some path through it ends on a target output; it leaks when some path
// steps from it to a cell that no target-reaching path visits, or exits on a
// non-target output. Exponential in depth.
inline PathSets path_enumeration(const qps::CircuitLayout& layout, const std::vector<std::size_t>& inputs,
                                 const std::vector<std::size_t>& outputs) {
  const auto& cells = layout.cells;
  // Next cell on `mode` strictly after layer `after` (or after any layer if first).
  auto next_on = [&](std::size_t mode, long after) -> long {
    long best = -1;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if ((c.mode_a == mode || c.mode_b == mode) && static_cast<long>(c.layer) > after) {
        if (best < 0 || c.layer < cells[static_cast<std::size_t>(best)].layer) best = static_cast<long>(i);
      }
    }
    return best;
  };
  // A step is a cell index (>= 0) or an exit on mode m encoded as -(m+1).
  std::vector<std::vector<long>> paths;
  std::vector<long> cur;
  std::function<void(std::size_t, long)> walk = [&](std::size_t mode, long after) {
    const long nxt = next_on(mode, after);
    if (nxt < 0) {
      cur.push_back(-static_cast<long>(mode) - 1);
      paths.push_back(cur);
      cur.pop_back();
      return;
    }
    cur.push_back(nxt);
    const auto& c = cells[static_cast<std::size_t>(nxt)];
    walk(c.mode_a, static_cast<long>(c.layer));
    walk(c.mode_b, static_cast<long>(c.layer));
    cur.pop_back();
  };
  for (std::size_t s : inputs) walk(s, -1);

  auto is_target_exit = [&](long step) {
    return step < 0 && std::find(outputs.begin(), outputs.end(), static_cast<std::size_t>(-step - 1)) != outputs.end();
  };
  PathSets out;
  for (const auto& p : paths) {
    if (!is_target_exit(p.back())) continue;
    for (long step : p) {
      if (step >= 0) out.diamond.insert(static_cast<std::size_t>(step));
    }
  }
  for (const auto& p : paths) {
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      const auto v = static_cast<std::size_t>(p[i]);
      if (!out.diamond.count(v)) continue;
      const long nxt = p[i + 1];
      const bool outside = nxt >= 0 ? !out.diamond.count(static_cast<std::size_t>(nxt)) : !is_target_exit(nxt);
      if (outside) out.leaking.insert(v);
    }
  }
  return out;
}

}  // namespace oracle
