#include "tsadv/target.hpp"

#include <algorithm>
#include <cmath>

namespace tsadv {

std::string AttackTargetSpec::name() const {
    switch (kind) {
    case TargetKind::dta: return direction > 0 ? "dta_up" : "dta_down";
    case TargetKind::ata: return "ata";
    case TargetKind::tta:
        if (inner == InnerKind::amplitudinal) return "tta_amp";
        return direction > 0 ? "tta_up" : "tta_down";
    case TargetKind::untargeted: return "untargeted";
    }
    return "?";
}

void AttackTargetSpec::validate(std::size_t sequence_length) const {
    if (kind == TargetKind::dta || (kind == TargetKind::tta && inner == InnerKind::directional)) {
        if (direction != 1 && direction != -1)
            throw ConfigError("attack direction must be +1 or -1, got " +
                              std::to_string(direction));
    }
    if (kind == TargetKind::ata || (kind == TargetKind::tta && inner == InnerKind::amplitudinal)) {
        if (!std::isfinite(tau)) throw ConfigError("amplitude threshold tau must be finite");
    }
    if (kind == TargetKind::tta) {
        if (!(t1 < t2) || t2 > sequence_length)
            throw ConfigError("temporal window [" + std::to_string(t1) + "," +
                              std::to_string(t2) + ") out of range for sequence of length " +
                              std::to_string(sequence_length));
    }
}

AttackTargetSpec target_spec_from_name(const std::string& name) {
    AttackTargetSpec s;
    if (name == "dta_up") {
        s.kind = TargetKind::dta;
        s.direction = +1;
    } else if (name == "dta_down") {
        s.kind = TargetKind::dta;
        s.direction = -1;
    } else if (name == "ata") {
        s.kind = TargetKind::ata;
    } else if (name == "tta_up") {
        s.kind = TargetKind::tta;
        s.inner = InnerKind::directional;
        s.direction = +1;
    } else if (name == "tta_down") {
        s.kind = TargetKind::tta;
        s.inner = InnerKind::directional;
        s.direction = -1;
    } else if (name == "tta_amp") {
        s.kind = TargetKind::tta;
        s.inner = InnerKind::amplitudinal;
    } else if (name == "untargeted") {
        s.kind = TargetKind::untargeted;
    } else {
        throw ConfigError("unknown attack target '" + name + "'");
    }
    return s;
}

TargetSequence dta_target(std::span<const double> y, int direction) {
    if (direction != 1 && direction != -1)
        throw ConfigError("attack direction must be +1 or -1, got " + std::to_string(direction));
    TargetSequence out;
    out.values.reserve(y.size());
    for (double v : y) out.values.push_back(v + direction * std::abs(v));
    return out;
}

TargetSequence ata_target(std::span<const double> y, double tau, LimSemantics lim) {
    if (!std::isfinite(tau)) throw ConfigError("amplitude threshold tau must be finite");
    TargetSequence out;
    out.values.reserve(y.size());
    for (double v : y)
        out.values.push_back(lim == LimSemantics::upper_clip
                                 ? std::min(v, tau)
                                 : std::copysign(std::min(std::abs(v), tau), v));
    return out;
}

TargetSequence tta_target(std::span<const double> y, std::size_t t1, std::size_t t2,
                          const AttackTargetSpec& inner) {
    if (!(t1 < t2) || t2 > y.size())
        throw ConfigError("temporal window [" + std::to_string(t1) + "," + std::to_string(t2) +
                          ") out of range for sequence of length " + std::to_string(y.size()));
    if (inner.kind != TargetKind::dta && inner.kind != TargetKind::ata)
        throw ConfigError("temporal attack inner kind must be dta or ata");
    TargetSequence inner_seq = inner.kind == TargetKind::dta
                                   ? dta_target(y, inner.direction)
                                   : ata_target(y, inner.tau, inner.lim);
    TargetSequence out;
    out.values.assign(y.begin(), y.end());
    for (std::size_t i = t1; i < t2; ++i) out.values[i] = inner_seq.values[i];
    return out;
}

TargetSequence untargeted_reference(std::span<const double> y) {
    TargetSequence out;
    out.values.assign(y.begin(), y.end());
    out.untargeted = true;
    return out;
}

TargetSequence build_targets(const AttackTargetSpec& spec, std::span<const double> predictions) {
    spec.validate(predictions.size());
    switch (spec.kind) {
    case TargetKind::dta: return dta_target(predictions, spec.direction);
    case TargetKind::ata: return ata_target(predictions, spec.tau, spec.lim);
    case TargetKind::tta: {
        AttackTargetSpec inner = spec;
        inner.kind = spec.inner == InnerKind::directional ? TargetKind::dta : TargetKind::ata;
        return tta_target(predictions, spec.t1, spec.t2, inner);
    }
    case TargetKind::untargeted: return untargeted_reference(predictions);
    }
    throw std::logic_error("unreachable target kind");
}

} // namespace tsadv
