#include "hcsp/hierarchy.hpp"

#include "hcsp/error.hpp"

namespace hcsp {

namespace {

int bit(int sign) { return sign > 0 ? 1 : 0; }
int sign_of(int bit) { return bit ? +1 : -1; }

}  // namespace

int GestureClass::leaf_index() const noexcept {
    return 4 * bit(static_cast<int>(hand)) + 2 * bit(static_cast<int>(fingers)) +
           bit(static_cast<int>(thumb));
}

GestureClass GestureClass::from_leaf_index(int index) {
    if (index < 0 || index >= kNumGestures) {
        fail(ErrorKind::Parameter, "leaf index " + std::to_string(index) + " outside 0..7");
    }
    return {static_cast<Hand>(sign_of((index >> 2) & 1)),
            static_cast<Fingers>(sign_of((index >> 1) & 1)),
            static_cast<Thumb>(sign_of(index & 1))};
}

int GestureClass::sign_at(int level) const {
    switch (level) {
        case 1: return static_cast<int>(hand);
        case 2: return static_cast<int>(fingers);
        case 3: return static_cast<int>(thumb);
        default: fail(ErrorKind::Parameter, "level " + std::to_string(level) + " outside 1..3");
    }
}

std::string GestureClass::to_string() const {
    return std::string(hcsp::to_string(hand)) + "/" + hcsp::to_string(fingers) + "/" +
           hcsp::to_string(thumb);
}

std::array<GestureClass, kNumGestures> all_gestures() {
    std::array<GestureClass, kNumGestures> out;
    for (int i = 0; i < kNumGestures; ++i) out[i] = GestureClass::from_leaf_index(i);
    return out;
}

CategoryLabel category_of(const GestureClass& g, Level level) {
    return {level, g.sign_at(static_cast<int>(level))};
}

bool CategoryScope::contains(const GestureClass& g) const {
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (g.sign_at(static_cast<int>(i) + 1) != path[i]) return false;
    }
    return true;
}

std::string CategoryScope::to_string() const {
    if (path.empty()) return "pooled";
    std::string s = "branch(";
    for (std::size_t i = 0; i < path.size(); ++i) {
        if (i) s += ",";
        if (i == 0) s += path[i] < 0 ? "left" : "right";
        if (i == 1) s += path[i] < 0 ? "extension" : "flexion";
    }
    return s + ")";
}

Partition partition(std::span<const GestureClass> labels, Level level, const CategoryScope& scope) {
    const int lvl = static_cast<int>(level);
    if (!scope.is_pooled() && static_cast<int>(scope.path.size()) != lvl - 1) {
        fail(ErrorKind::Parameter, "branch scope for level " + std::to_string(lvl) +
                                       " must fix exactly " + std::to_string(lvl - 1) + " higher levels");
    }
    for (int s : scope.path) {
        if (s != -1 && s != 1) fail(ErrorKind::Parameter, "branch path entries must be -1 or +1");
    }
    Partition p;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!scope.contains(labels[i])) continue;
        (labels[i].sign_at(lvl) < 0 ? p.neg : p.pos).push_back(i);
    }
    auto side_name = [&](int sign) {
        return "level " + std::to_string(lvl) + " category l=" + (sign < 0 ? "-1" : "+1") + " (" +
               (lvl == 1   ? (sign < 0 ? "left" : "right")
                : lvl == 2 ? (sign < 0 ? "extension" : "flexion")
                           : (sign < 0 ? "abduction" : "adduction")) +
               ") in scope " + scope.to_string();
    };
    if (p.neg.empty()) fail(ErrorKind::Training, "no trials for " + side_name(-1));
    if (p.pos.empty()) fail(ErrorKind::Training, "no trials for " + side_name(+1));
    return p;
}

std::vector<std::pair<Level, CategoryScope>> classifier_scopes(bool per_branch) {
    if (!per_branch) {
        return {{Level::Hand, CategoryScope::pooled()},
                {Level::Fingers, CategoryScope::pooled()},
                {Level::Thumb, CategoryScope::pooled()}};
    }
    std::vector<std::pair<Level, CategoryScope>> out;
    out.emplace_back(Level::Hand, CategoryScope::pooled());
    for (int h : {-1, +1}) out.emplace_back(Level::Fingers, CategoryScope::branch({h}));
    for (int h : {-1, +1}) {
        for (int f : {-1, +1}) out.emplace_back(Level::Thumb, CategoryScope::branch({h, f}));
    }
    return out;
}

const char* to_string(Hand h) { return h == Hand::Left ? "left" : "right"; }
const char* to_string(Fingers f) { return f == Fingers::Extension ? "extension" : "flexion"; }
const char* to_string(Thumb t) { return t == Thumb::Abduction ? "abduction" : "adduction"; }

}  // namespace hcsp
