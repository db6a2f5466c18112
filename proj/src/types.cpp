#include "omr/types.hpp"

namespace omr {

std::optional<AnswerClass> class_from_code(int code) {
  if (code >= 1 && code <= 3) return static_cast<AnswerClass>(code);
  return std::nullopt;
}

std::string_view class_name(AnswerClass c) {
  switch (c) {
    case AnswerClass::Confirmed: return "confirmed";
    case AnswerClass::CrossedOut: return "crossed_out";
    case AnswerClass::Empty: return "empty";
  }
  return "?";
}

std::optional<AnswerClass> class_from_name(std::string_view name) {
  for (auto c : kAllClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

std::optional<ClassSet> ClassSet::from_subset(char letter) {
  using enum AnswerClass;
  switch (letter) {
    case 'a': return ClassSet{Confirmed, CrossedOut, Empty};
    case 'b': return ClassSet{Confirmed, Empty};
    case 'c': return ClassSet{Confirmed, CrossedOut};
    case 'd': return ClassSet{CrossedOut, Empty};
    default: return std::nullopt;
  }
}

std::optional<char> ClassSet::subset_letter() const {
  for (char l : {'a', 'b', 'c', 'd'}) {
    if (*from_subset(l) == *this) return l;
  }
  return std::nullopt;
}

std::vector<AnswerClass> ClassSet::members() const {
  std::vector<AnswerClass> out;
  for (auto c : kAllClasses) {
    if (contains(c)) out.push_back(c);
  }
  return out;
}

SampleRefs refs_of(const std::vector<LabeledSample>& samples) {
  SampleRefs out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

}  // namespace omr
