#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ifsim/common.hpp"

namespace ifsim {

// E = 1/2 * C * V^2
inline double capacitor_energy(double capacitance_f, double volts) {
  return 0.5 * capacitance_f * volts * volts;
}

inline double capacitor_voltage(double capacitance_f, double energy_j) {
  if (energy_j <= 0) return 0.0;
  return std::sqrt(2.0 * energy_j / capacitance_f);
}

// Minimum voltage at which one more context-switch window of worst-case draw
// can complete before the supply falls below the operating voltage:
//   V_th = sqrt(2 * P_max * T_cs / C + V_op^2)
inline double low_voltage_threshold(double p_max_w, double t_cs_s,
                                    double capacitance_f, double v_op) {
  return std::sqrt(2.0 * p_max_w * t_cs_s / capacitance_f + v_op * v_op);
}

struct PowerParams {
  double capacitance_f = 200e-6;
  double v_on = 2.8;   // device powers on when rising through this
  double v_off = 2.4;  // device powers off when falling through this
  double v_op = 2.4;   // minimum operating voltage used in the threshold formula
  double v_max = 3.3;  // harvester clamp
  double v_th = 0.0;   // low-voltage interrupt level; 0 means derive from formula
  double p_max_w = 5.25e-3;
  double idle_draw_w = 2.4e-3;  // MCU active, no task work

  double resolved_v_th(double t_cs_s) const {
    return v_th > 0.0 ? v_th : low_voltage_threshold(p_max_w, t_cs_s, capacitance_f, v_op);
  }
};

struct TraceSegment {
  Micros duration_us = 0;
  double harvest_w = 0.0;
};

struct PowerTrace {
  std::string name;
  std::vector<TraceSegment> segments;

  Micros total_us() const {
    Micros t = 0;
    for (const auto& s : segments) t += s.duration_us;
    return t;
  }
};

inline PowerTrace builtin_trace_strong() {
  return PowerTrace{"strong", {TraceSegment{100'000'000, 3.0e-3}}};
}

inline PowerTrace builtin_trace_weak() {
  return PowerTrace{"weak", {TraceSegment{100'000'000, 1.5e-3}}};
}

// Plain-text trace: one `duration_ms harvest_mw` pair per line.
inline PowerTrace parse_power_trace(std::istream& in, const std::string& name) {
  PowerTrace tr;
  tr.name = name;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double dur_ms = 0, mw = 0;
    if (!(ls >> dur_ms)) continue;
    if (!(ls >> mw)) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": missing harvest value");
    }
    if (dur_ms <= 0) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": duration must be positive");
    }
    if (mw < 0) {
      throw ConfigError("trace line " + std::to_string(lineno) + ": harvest must be >= 0");
    }
    tr.segments.push_back(
        TraceSegment{static_cast<Micros>(std::llround(dur_ms * 1000.0)), mw * 1e-3});
  }
  if (tr.segments.empty()) throw ConfigError("trace '" + name + "' has no segments");
  return tr;
}

inline PowerTrace load_power_trace(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open power trace: " + path);
  return parse_power_trace(f, path);
}

enum class PowerEventKind { PowerOn, PowerOff, LowVoltage };

inline const char* to_string(PowerEventKind k) {
  switch (k) {
    case PowerEventKind::PowerOn: return "power_on";
    case PowerEventKind::PowerOff: return "power_off";
    case PowerEventKind::LowVoltage: return "low_voltage";
  }
  return "?";
}

struct PowerEvent {
  Micros at_us = 0;  // offset from the start of the step that produced it
  PowerEventKind kind = PowerEventKind::PowerOn;
};

// Capacitor-backed supply with on/off hysteresis and an edge-triggered
// low-voltage level. Integration is piecewise-constant and closed-form: the
// trace is constant within a segment and the caller's draw is constant within
// a step, so energy evolves linearly between discontinuities.
class PowerModel {
 public:
  PowerModel(PowerParams params, PowerTrace trace, double t_cs_s)
      : params_(params), trace_(std::move(trace)) {
    if (trace_.segments.empty()) throw ConfigError("power trace has no segments");
    if (!(params_.v_off <= params_.v_on)) throw ConfigError("v_off must be <= v_on");
    e_on_ = capacitor_energy(params_.capacitance_f, params_.v_on);
    e_off_ = capacitor_energy(params_.capacitance_f, params_.v_off);
    e_max_ = capacitor_energy(params_.capacitance_f, params_.v_max);
    double vth = params_.resolved_v_th(t_cs_s);
    if (vth < params_.v_off || vth >= params_.v_on) {
      throw ConfigError("v_th must satisfy v_off <= v_th < v_on; got " + std::to_string(vth));
    }
    e_th_ = capacitor_energy(params_.capacitance_f, vth);
    v_th_resolved_ = vth;
    energy_j_ = e_off_;  // cold start: drained to the off threshold
  }

  const PowerParams& params() const { return params_; }
  double v_th() const { return v_th_resolved_; }
  double energy_j() const { return energy_j_; }
  double v_now() const { return capacitor_voltage(params_.capacitance_f, energy_j_); }
  bool device_on() const { return device_on_; }
  bool lv_armed() const { return lv_armed_; }
  double harvest_w() const { return trace_.segments[seg_idx_].harvest_w; }

  void set_voltage(double v) { energy_j_ = capacitor_energy(params_.capacitance_f, v); }

  // Advances exactly span_us with the given device draw (applied only while
  // the device is on). Does not apply on/off/low-voltage transitions; callers
  // bound spans with micros_to_next_event so crossings land on span ends.
  void integrate(Micros span_us, double draw_w) {
    Micros left = span_us;
    while (left > 0) {
      Micros seg_rem = trace_.segments[seg_idx_].duration_us - seg_elapsed_;
      Micros sub = std::min(left, seg_rem);
      double net = harvest_w() - (device_on_ ? draw_w : 0.0);
      energy_j_ += net * static_cast<double>(sub) * 1e-6;
      if (energy_j_ > e_max_) energy_j_ = e_max_;
      if (energy_j_ < 0.0) energy_j_ = 0.0;
      seg_elapsed_ += sub;
      if (seg_elapsed_ == trace_.segments[seg_idx_].duration_us) {
        seg_elapsed_ = 0;
        seg_idx_ = (seg_idx_ + 1) % trace_.segments.size();  // traces repeat
      }
      left -= sub;
    }
  }

  // The due transition at the current instant, if any. Low voltage is
  // reported before power-off so the interrupt always precedes the failure.
  std::optional<PowerEventKind> pending_transition() const {
    if (device_on_) {
      if (lv_armed_ && energy_j_ <= e_th_ && energy_j_ > e_off_) {
        return PowerEventKind::LowVoltage;
      }
      if (energy_j_ <= e_off_) {
        return lv_armed_ ? PowerEventKind::LowVoltage : PowerEventKind::PowerOff;
      }
    } else if (energy_j_ >= e_on_) {
      return PowerEventKind::PowerOn;
    }
    return std::nullopt;
  }

  PowerEventKind apply_pending() {
    auto kind = pending_transition();
    if (!kind) throw LogicError("apply_pending with no due power transition");
    switch (*kind) {
      case PowerEventKind::PowerOn:
        device_on_ = true;
        lv_armed_ = true;  // fires at most once per power-on period
        break;
      case PowerEventKind::PowerOff:
        device_on_ = false;
        break;
      case PowerEventKind::LowVoltage:
        lv_armed_ = false;
        break;
    }
    return *kind;
  }

  // Sudden supply cut (crash injection): the capacitor is drained to the off
  // threshold and the device goes dark, as in a natural failure.
  void force_failure() {
    if (energy_j_ > e_off_) energy_j_ = e_off_;
    device_on_ = false;
    lv_armed_ = false;
  }

  // Microseconds until the next discontinuity: a threshold crossing under the
  // current regime or a trace segment boundary, whichever comes first.
  Micros micros_to_next_event(double draw_w) const {
    Micros seg_rem = trace_.segments[seg_idx_].duration_us - seg_elapsed_;
    Micros best = seg_rem == 0 ? 1 : seg_rem;
    double net = harvest_w() - (device_on_ ? draw_w : 0.0);
    double target = -1.0;
    if (device_on_ && net < 0.0) {
      target = (lv_armed_ && energy_j_ > e_th_) ? e_th_ : e_off_;
    } else if (!device_on_ && net > 0.0 && energy_j_ < e_on_) {
      target = e_on_;
    }
    if (target >= 0.0) {
      double dt_s = (target - energy_j_) / net;  // net and (target-E) share sign
      if (dt_s < 0.0) dt_s = 0.0;
      double dt_us = std::ceil(dt_s * 1e6);
      Micros dt = dt_us < 1.0 ? 1
                              : (dt_us >= 9e18 ? std::numeric_limits<Micros>::max()
                                               : static_cast<Micros>(dt_us));
      best = std::min(best, dt);
    }
    return best;
  }

  // Steps dt_us forward, applying transitions as they come due and returning
  // them with offsets relative to the start of the step.
  std::vector<PowerEvent> step_power(Micros dt_us, double draw_w) {
    std::vector<PowerEvent> events;
    Micros done = 0;
    while (true) {
      while (pending_transition()) {
        events.push_back(PowerEvent{done, apply_pending()});
      }
      if (done >= dt_us) break;
      Micros adv = std::min(dt_us - done, micros_to_next_event(draw_w));
      integrate(adv, draw_w);
      done += adv;
    }
    return events;
  }

 private:
  PowerParams params_;
  PowerTrace trace_;
  std::size_t seg_idx_ = 0;
  Micros seg_elapsed_ = 0;
  double energy_j_ = 0.0;
  double e_on_ = 0, e_off_ = 0, e_th_ = 0, e_max_ = 0;
  double v_th_resolved_ = 0;
  bool device_on_ = false;
  bool lv_armed_ = false;
};

}  // namespace ifsim
