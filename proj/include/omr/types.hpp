#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "omr/image.hpp"

namespace omr {

// Numeric codes follow the dataset's answerType encoding.
enum class AnswerClass : int { Confirmed = 1, CrossedOut = 2, Empty = 3 };

inline constexpr std::array<AnswerClass, 3> kAllClasses{AnswerClass::Confirmed, AnswerClass::CrossedOut,
                                                        AnswerClass::Empty};

inline int code(AnswerClass c) { return static_cast<int>(c); }
inline int class_index(AnswerClass c) { return static_cast<int>(c) - 1; }
std::optional<AnswerClass> class_from_code(int code);
std::string_view class_name(AnswerClass c);
std::optional<AnswerClass> class_from_name(std::string_view name);

// Subset of the three answer classes, ordered by code.
class ClassSet {
 public:
  ClassSet() = default;
  ClassSet(std::initializer_list<AnswerClass> classes) {
    for (auto c : classes) insert(c);
  }

  static ClassSet all() { return {AnswerClass::Confirmed, AnswerClass::CrossedOut, AnswerClass::Empty}; }
  // Evaluation subsets: (a) all three, (b) confirmed/empty, (c) confirmed/crossed out, (d) crossed out/empty.
  static std::optional<ClassSet> from_subset(char letter);
  std::optional<char> subset_letter() const;

  void insert(AnswerClass c) { bits_ |= bit(c); }
  bool contains(AnswerClass c) const { return (bits_ & bit(c)) != 0; }
  bool contains(const ClassSet& other) const { return (bits_ & other.bits_) == other.bits_; }
  int size() const { return __builtin_popcount(bits_); }
  std::vector<AnswerClass> members() const;
  std::uint8_t bits() const { return bits_; }

  friend bool operator==(const ClassSet&, const ClassSet&) = default;

 private:
  static std::uint8_t bit(AnswerClass c) { return static_cast<std::uint8_t>(1u << class_index(c)); }
  std::uint8_t bits_ = 0;
};

struct RoiBox {
  Rect rect;
  int question_index = 0;
  int choice_index = 0;
};

struct RoiImage {
  ColorImage pixels;
  RoiBox source;
};

struct LabeledSample {
  RoiImage roi;
  AnswerClass label = AnswerClass::Empty;
  std::string exam_id;
  std::string image_name;
  int id = 0;
  bool augmented = false;
  int source_id = -1;  // id of the original sample for augmented variants
};

using SampleRefs = std::vector<const LabeledSample*>;
SampleRefs refs_of(const std::vector<LabeledSample>& samples);

}  // namespace omr
