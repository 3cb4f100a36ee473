#pragma once

#include "levyq/model.hpp"
#include "levyq/rng.hpp"

namespace levyq {

/// One jump of the compound Poisson part: absolute time and signed size.
struct PathEvent {
    double time;
    double jump;
};

/// Draws successive jumps of a model: exponential gaps at the total jump rate,
/// then the side (up or down) and the size.
class EventGenerator {
public:
    explicit EventGenerator(const LevyModel& model)
        : up_(model.up ? &model.up->dist : nullptr), down_(model.down ? &model.down->dist : nullptr) {
        const double up_rate = model.up ? model.up->rate : 0.0;
        const double down_rate = model.down ? model.down->rate : 0.0;
        total_rate_ = up_rate + down_rate;
        up_share_ = total_rate_ > 0.0 ? up_rate / total_rate_ : 0.0;
    }

    double total_rate() const noexcept { return total_rate_; }

    /// Time until the next jump.
    double gap(PhiloxStream& rng) const { return rng.exponential() / total_rate_; }

    /// Signed size of the next jump.
    double jump(PhiloxStream& rng) const {
        if (down_ == nullptr || (up_ != nullptr && rng.uniform() < up_share_)) return up_->sample(rng);
        return -down_->sample(rng);
    }

private:
    const JumpDistribution* up_;
    const JumpDistribution* down_;
    double total_rate_ = 0.0;
    double up_share_ = 0.0;
};

}  // namespace levyq
