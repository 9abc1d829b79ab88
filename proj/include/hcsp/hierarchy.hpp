#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hcsp {

// Category signs. -1 and +1 are the two sides of every binary split.
enum class Hand : int { Left = -1, Right = +1 };
enum class Fingers : int { Extension = -1, Flexion = +1 };
enum class Thumb : int { Abduction = -1, Adduction = +1 };

/// Leaf of the three-level gesture tree.
///
/// leaf_index = 4*bit(hand) + 2*bit(fingers) + bit(thumb), with bit(-1) = 0 and
/// bit(+1) = 1, so index 0 is (left, extension, abduction) and 7 is
/// (right, flexion, adduction).
struct GestureClass {
    Hand hand = Hand::Left;
    Fingers fingers = Fingers::Extension;
    Thumb thumb = Thumb::Abduction;

    int leaf_index() const noexcept;
    static GestureClass from_leaf_index(int index);
    /// Sign of the axis split at `level` (1, 2 or 3).
    int sign_at(int level) const;

    std::string to_string() const;
    friend bool operator==(const GestureClass&, const GestureClass&) = default;
};

inline constexpr int kNumGestures = 8;
inline constexpr int kNumLevels = 3;

/// All eight leaves in leaf-index order.
std::array<GestureClass, kNumGestures> all_gestures();

/// Level 1 splits on hand, level 2 on fingers, level 3 on thumb.
enum class Level : int { Hand = 1, Fingers = 2, Thumb = 3 };

struct CategoryLabel {
    Level level;
    int l;  // -1 or +1
    friend bool operator==(const CategoryLabel&, const CategoryLabel&) = default;
};

CategoryLabel category_of(const GestureClass& g, Level level);

/// Which trials a level classifier sees. An empty path is the pooled scope;
/// otherwise `path[i]` fixes the sign of level i+1, and the path length must be
/// level - 1.
struct CategoryScope {
    std::vector<int> path;

    static CategoryScope pooled() { return {}; }
    static CategoryScope branch(std::vector<int> p) { return {std::move(p)}; }
    bool is_pooled() const noexcept { return path.empty(); }
    bool contains(const GestureClass& g) const;
    std::string to_string() const;
    friend bool operator==(const CategoryScope&, const CategoryScope&) = default;
};

/// Indices of the trials on each side of a level's split, restricted to scope.
struct Partition {
    std::vector<std::size_t> neg;
    std::vector<std::size_t> pos;
};

/// Throws a training error naming the empty category if either side is empty.
Partition partition(std::span<const GestureClass> labels, Level level, const CategoryScope& scope);

/// Scopes of every classifier for a topology: 3 pooled, or 1 + 2 + 4 per branch.
std::vector<std::pair<Level, CategoryScope>> classifier_scopes(bool per_branch);

const char* to_string(Hand h);
const char* to_string(Fingers f);
const char* to_string(Thumb t);

}  // namespace hcsp
