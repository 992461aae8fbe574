#pragma once

namespace korra::timing {

/// Normal distribution parameters. `variance` is a variance; the standard
/// deviation used for draws is its square root.
struct NormalParams {
  double mean = 0.0;
  double variance = 0.0;

  friend bool operator==(const NormalParams&, const NormalParams&) = default;
};

enum class IntervalKind { smile, gaze_hold, pause_new, pause_react, response_timeout };

struct TimingParams {
  NormalParams smile{12.0, 3.0};
  NormalParams gaze_hold{7.0, 1.2};
  NormalParams pause_new{3.7, 0.25};
  NormalParams pause_react{5.5, 0.5};
  NormalParams response_timeout{20.0, 9.0};
  /// Lower bound for every sampled interval, seconds.
  double floor = 0.1;

  const NormalParams& operator[](IntervalKind kind) const {
    switch (kind) {
      case IntervalKind::smile: return smile;
      case IntervalKind::gaze_hold: return gaze_hold;
      case IntervalKind::pause_new: return pause_new;
      case IntervalKind::pause_react: return pause_react;
      case IntervalKind::response_timeout: return response_timeout;
    }
    return pause_new;
  }

  friend bool operator==(const TimingParams&, const TimingParams&) = default;
};

enum class GateKind { address_by_name, joke_clarify };

struct GateParams {
  double address_by_name_p = 0.25;
  double joke_clarify_p = 0.5;

  double operator[](GateKind kind) const {
    return kind == GateKind::address_by_name ? address_by_name_p : joke_clarify_p;
  }

  friend bool operator==(const GateParams&, const GateParams&) = default;
};

}  // namespace korra::timing
