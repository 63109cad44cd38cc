#include "npupg/controllers.hpp"

#include <algorithm>

#include "npupg/util.hpp"

namespace npupg {

UnitGate::UnitGate(uint32_t delay, uint32_t idle_threshold, PowerMode gated_mode,
                   PolicyMode initial_policy)
    : delay_(delay),
      threshold_(idle_threshold),
      gated_mode_(gated_mode),
      policy_(initial_policy) {
  if (gated_mode_ == PowerMode::On) throw SimError("UnitGate: gated mode must be Off or Sleep");
  // Starting pinned gated bills no entry transition: the unit was never up.
  bool start_gated =
      initial_policy == PolicyMode::Off || initial_policy == PolicyMode::Sleep;
  state_ = start_gated ? St::Gated : St::On;
}

void UnitGate::check_order(uint64_t t) const {
  if (finished_) throw SimError("UnitGate: call after finish()");
  if (t < frontier_) throw SimError("UnitGate: commands must be in time order");
}

void UnitGate::emit(uint64_t b, uint64_t e, PowerMode mode, bool trans) {
  if (e <= b) return;
  if (!spans_.empty()) {
    ModeSpan& last = spans_.back();
    if (last.end == b && last.mode == mode && last.transition == trans) {
      last.end = e;
      return;
    }
  }
  spans_.push_back(ModeSpan{b, e, mode, trans});
}

void UnitGate::advance_to(uint64_t t) {
  for (;;) {
    if ((state_ == St::TransOff || state_ == St::TransOn) && trans_end_ <= frontier_) {
      if (state_ == St::TransOff) {
        state_ = St::Gated;
      } else {
        state_ = St::On;
        idle_since_ = frontier_;
      }
      continue;
    }
    if (frontier_ >= t) break;
    switch (state_) {
      case St::On: {
        if (policy_ == PolicyMode::Auto) {
          // max() handles resuming Auto after a pinned phase: the unit may
          // already be past its trigger, in which case it gates right away.
          uint64_t gate_at = std::max(idle_since_ + threshold_, frontier_);
          // An access landing exactly at the detector's trigger cycle wins.
          if (gate_at < t) {
            emit(frontier_, gate_at, PowerMode::On, false);
            frontier_ = gate_at;
            state_ = St::TransOff;
            trans_end_ = gate_at + delay_;
            continue;
          }
        }
        emit(frontier_, t, PowerMode::On, false);
        frontier_ = t;
        break;
      }
      case St::TransOff:
      case St::TransOn: {
        uint64_t e = std::min<uint64_t>(trans_end_, t);
        emit(frontier_, e, state_ == St::TransOff ? gated_mode_ : PowerMode::On, true);
        frontier_ = e;
        break;
      }
      case St::Gated:
        emit(frontier_, t, gated_mode_, false);
        frontier_ = t;
        break;
    }
  }
}

uint64_t UnitGate::request(uint64_t t) {
  check_order(t);
  advance_to(t);
  switch (state_) {
    case St::On:
      return t;
    case St::TransOn:
      return trans_end_;
    case St::TransOff: {
      // Reverse once the in-flight gate completes; the aborted episode still
      // pays its switching charge.
      uint64_t wake_at = trans_end_;
      advance_to(wake_at);  // lands in Gated at wake_at
      episodes_++;
      state_ = St::TransOn;
      trans_end_ = wake_at + delay_;
      return trans_end_;
    }
    case St::Gated:
      episodes_++;
      state_ = St::TransOn;
      trans_end_ = t + delay_;
      return trans_end_;
  }
  return t;  // unreachable
}

void UnitGate::busy(uint64_t start, uint64_t end) {
  check_order(start);
  if (end < start) throw SimError("UnitGate: busy span ends before it starts");
  advance_to(start);
  if (state_ != St::On)
    throw SimError("UnitGate: busy on a gated unit; request() first");
  if (end > idle_since_) idle_since_ = end;
}

void UnitGate::set_policy(PolicyMode m, uint64_t now) {
  check_order(now);
  advance_to(now);
  PolicyMode prev = policy_;
  policy_ = m;
  switch (m) {
    case PolicyMode::On:
      if (state_ == St::Gated || state_ == St::TransOff) (void)request(now);
      break;
    case PolicyMode::Off:
    case PolicyMode::Sleep: {
      if (state_ == St::TransOn) {
        advance_to(trans_end_);  // finish waking, then gate again
      }
      if (state_ == St::On) {
        state_ = St::TransOff;
        trans_end_ = frontier_ + delay_;
      }
      break;  // Gated / TransOff: already heading there
    }
    case PolicyMode::Auto:
      // A force-gated unit wakes before the detector takes over; otherwise a
      // compiler wake-ahead hint would have to pin the unit on forever. A
      // unit the detector gated on its own stays down.
      if ((prev == PolicyMode::Off || prev == PolicyMode::Sleep) &&
          (state_ == St::Gated || state_ == St::TransOff))
        (void)request(now);
      break;
  }
}

void UnitGate::finish(uint64_t end) {
  check_order(end);
  advance_to(end);
  finished_ = true;
}

uint64_t UnitGate::on_cycles() const {
  uint64_t n = 0;
  for (const ModeSpan& s : spans_)
    if (s.mode == PowerMode::On && !s.transition) n += s.end - s.begin;
  return n;
}

uint64_t UnitGate::gated_cycles() const {
  uint64_t n = 0;
  for (const ModeSpan& s : spans_)
    if (s.mode != PowerMode::On && !s.transition) n += s.end - s.begin;
  return n;
}

uint64_t UnitGate::transition_cycles() const {
  uint64_t n = 0;
  for (const ModeSpan& s : spans_)
    if (s.transition) n += s.end - s.begin;
  return n;
}

SramGates::SramGates(uint64_t num_segments, uint64_t segment_bytes,
                     uint32_t sleep_delay, uint32_t off_delay,
                     uint32_t sleep_threshold, bool sweep_enabled,
                     uint64_t sweep_period)
    : seg_bytes_(segment_bytes),
      sleep_delay_(sleep_delay),
      off_delay_(off_delay),
      sleep_threshold_(sleep_threshold),
      sweep_enabled_(sweep_enabled),
      period_(sweep_period),
      segs_(num_segments) {
  if (segment_bytes == 0 || sweep_period == 0)
    throw SimError("SramGates: segment size and sweep period must be positive");
}

std::pair<uint64_t, uint64_t> SramGates::seg_range(uint64_t addr, uint64_t bytes) const {
  if (bytes == 0) return {0, 0};
  uint64_t first = addr / seg_bytes_;
  uint64_t last = (addr + bytes - 1) / seg_bytes_ + 1;
  if (last > segs_.size()) throw SimError("SramGates: access beyond capacity");
  return {first, last};
}

void SramGates::advance(Seg& s, uint64_t t) {
  while (s.since < t) {
    if (s.trans_until > s.since) {
      uint64_t e = std::min(s.trans_until, t);
      totals_.trans_cycles += e - s.since;
      s.since = e;
      continue;
    }
    if (s.mode == PowerMode::On && s.policy == PolicyMode::Auto && sweep_enabled_) {
      // The sweeping detector visits every segment once per period; the
      // segment drops to retention at the first sweep after its idle time
      // passes the threshold. An access on the sweep cycle itself wins.
      uint64_t trigger = std::max(s.last_end + sleep_threshold_, s.since);
      uint64_t boundary = ceil_div_u64(trigger, period_) * period_;
      if (boundary < t) {
        totals_.on_cycles += boundary - s.since;
        s.since = boundary;
        s.mode = PowerMode::Sleep;
        s.trans_until = boundary + sleep_delay_;
        continue;
      }
    }
    uint64_t span = t - s.since;
    switch (s.mode) {
      case PowerMode::On: totals_.on_cycles += span; break;
      case PowerMode::Sleep: totals_.sleep_cycles += span; break;
      case PowerMode::Off: totals_.off_cycles += span; break;
    }
    s.since = t;
  }
}

uint64_t SramGates::wake(Seg& s, uint64_t t) {
  advance(s, t);
  uint64_t at = t;
  if (s.trans_until > at) {
    if (s.mode == PowerMode::On) return s.trans_until;  // wake already in flight
    at = s.trans_until;  // let the entry finish, then reverse
    advance(s, at);
  }
  if (s.mode == PowerMode::On) return at;
  uint32_t d = (s.mode == PowerMode::Sleep) ? sleep_delay_ : off_delay_;
  // Switching charges count at wake, for the mode we wake from; a segment
  // still gated when the run ends never pays one.
  if (s.mode == PowerMode::Off) {
    totals_.off_episodes++;
    off_events_.push_back({at, -1});
  } else {
    totals_.sleep_episodes++;
  }
  s.mode = PowerMode::On;
  s.since = at;
  s.trans_until = at + d;
  return at + d;
}

uint64_t SramGates::access(uint64_t addr, uint64_t bytes, uint64_t start) {
  if (finished_) throw SimError("SramGates: access after finish()");
  auto [first, last] = seg_range(addr, bytes);
  uint64_t ready = start;
  for (uint64_t i = first; i < last; i++) ready = std::max(ready, wake(segs_[i], start));
  return ready;
}

void SramGates::note_busy(uint64_t addr, uint64_t bytes, uint64_t start, uint64_t end) {
  if (finished_) throw SimError("SramGates: busy after finish()");
  auto [first, last] = seg_range(addr, bytes);
  for (uint64_t i = first; i < last; i++) {
    Seg& s = segs_[i];
    advance(s, start);
    if (s.mode != PowerMode::On || s.trans_until > start)
      throw SimError("SramGates: busy on a gated segment; access() first");
    if (end > s.last_end) s.last_end = end;
  }
}

void SramGates::set_range_policy(uint64_t addr_start, uint64_t addr_end, PolicyMode m,
                                 uint64_t now) {
  if (finished_) throw SimError("SramGates: command after finish()");
  if (addr_end < addr_start) throw SimError("SramGates: inverted address range");
  auto [first, last] = seg_range(addr_start, addr_end - addr_start);
  for (uint64_t i = first; i < last; i++) {
    Seg& s = segs_[i];
    advance(s, now);
    PolicyMode prev = s.policy;
    s.policy = m;
    if (m == PolicyMode::Auto) {
      // Wake-ahead handoff: a force-gated segment comes back up and the
      // sweeper takes over; a segment the sweeper slept stays asleep.
      if ((prev == PolicyMode::Off || prev == PolicyMode::Sleep) &&
          s.mode != PowerMode::On)
        (void)wake(s, now);
      continue;
    }
    if (m == PolicyMode::On) {
      (void)wake(s, now);
      continue;
    }
    PowerMode target = (m == PolicyMode::Sleep) ? PowerMode::Sleep : PowerMode::Off;
    uint64_t at = now;
    if (s.trans_until > at) {
      at = s.trans_until;
      advance(s, at);
    }
    if (s.mode == target) continue;
    uint32_t d = (target == PowerMode::Sleep) ? sleep_delay_ : off_delay_;
    if (s.mode == PowerMode::Off) off_events_.push_back({at, -1});
    s.mode = target;
    s.since = at;
    s.trans_until = at + d;
    if (target == PowerMode::Off) off_events_.push_back({at + d, +1});
  }
}

bool SramGates::any_pinned_gated(uint64_t addr, uint64_t bytes) const {
  auto [first, last] = seg_range(addr, bytes);
  for (uint64_t i = first; i < last; i++) {
    PolicyMode p = segs_[i].policy;
    if (p == PolicyMode::Off || p == PolicyMode::Sleep) return true;
  }
  return false;
}

void SramGates::finish(uint64_t end) {
  if (finished_) throw SimError("SramGates: finish() twice");
  for (Seg& s : segs_) advance(s, end);
  std::stable_sort(off_events_.begin(), off_events_.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  end_ = end;
  finished_ = true;
}

}  // namespace npupg
