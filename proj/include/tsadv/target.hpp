#pragma once

#include <span>
#include <string>
#include <vector>

#include "tsadv/common.hpp"

namespace tsadv {

enum class TargetKind { dta, ata, tta, untargeted };
enum class InnerKind { directional, amplitudinal };

/// Two readings of the amplitude limiter lim(tau, y): clip from above
/// (default, matches the clipped-to-threshold prediction plots) or clamp
/// the magnitude keeping the sign.
enum class LimSemantics { upper_clip, magnitude_clamp };

/// What the adversary wants each forecast to become.
struct AttackTargetSpec {
    TargetKind kind = TargetKind::dta;
    int direction = +1;                       // +1 up / -1 down (dta, tta-directional)
    double tau = 0.9;                         // amplitude threshold (ata, tta-amplitudinal)
    std::size_t t1 = 0;                       // [t1, t2) forecast-index window (tta)
    std::size_t t2 = 0;
    InnerKind inner = InnerKind::directional; // tta only
    LimSemantics lim = LimSemantics::upper_clip;

    /// Canonical short name: dta_up, dta_down, ata, tta_up, tta_down,
    /// tta_amp, untargeted.
    std::string name() const;

    void validate(std::size_t sequence_length) const;
};

/// Parse a canonical name back into a spec (parameters filled by caller).
AttackTargetSpec target_spec_from_name(const std::string& name);

/// Per-forecast target values y'. `untargeted` flips the attack engine
/// from descending the loss toward the targets to ascending it away from
/// them.
struct TargetSequence {
    std::vector<double> values;
    bool untargeted = false;
};

/// y'_i = y_i + direction * |y_i|
TargetSequence dta_target(std::span<const double> y, int direction);

/// y'_i = lim(tau, y_i); upper_clip gives min(y_i, tau), magnitude_clamp
/// gives sign(y_i) * min(|y_i|, tau).
TargetSequence ata_target(std::span<const double> y, double tau,
                          LimSemantics lim = LimSemantics::upper_clip);

/// Inner target inside [t1, t2), untouched y outside.
TargetSequence tta_target(std::span<const double> y, std::size_t t1, std::size_t t2,
                          const AttackTargetSpec& inner);

/// The reference sequence itself, flagged for loss ascent.
TargetSequence untargeted_reference(std::span<const double> y);

/// Dispatch on spec.kind over a clean-prediction sequence.
TargetSequence build_targets(const AttackTargetSpec& spec, std::span<const double> predictions);

} // namespace tsadv
