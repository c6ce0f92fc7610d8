#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "regsim/errors.hpp"

namespace regsim {

// A register value: the unwritten sentinel `bot`, a boolean, or a small
// integer. `bot` compares unequal to every boolean and integer, and the
// booleans compare unequal to 0 and 1.
class Value {
 public:
  enum class Tag : std::uint8_t { Bot, Bool, Int };

  constexpr Value() : tag_(Tag::Bot), payload_(0) {}

  static constexpr Value bot() { return Value(); }
  static constexpr Value boolean(bool b) { return Value(Tag::Bool, b ? 1 : 0); }
  static constexpr Value integer(int v) { return Value(Tag::Int, v); }

  constexpr Tag tag() const { return tag_; }
  constexpr bool is_bot() const { return tag_ == Tag::Bot; }
  constexpr bool is_bool() const { return tag_ == Tag::Bool; }
  constexpr bool is_int() const { return tag_ == Tag::Int; }

  constexpr bool as_bool() const { return payload_ != 0; }
  constexpr int as_int() const { return payload_; }

  friend constexpr bool operator==(Value a, Value b) {
    return a.tag_ == b.tag_ && a.payload_ == b.payload_;
  }
  friend constexpr bool operator!=(Value a, Value b) { return !(a == b); }
  friend constexpr bool operator<(Value a, Value b) {
    return a.tag_ != b.tag_ ? a.tag_ < b.tag_ : a.payload_ < b.payload_;
  }

  std::string str() const {
    switch (tag_) {
      case Tag::Bot:
        return "bot";
      case Tag::Bool:
        return payload_ ? "true" : "false";
      case Tag::Int:
        return std::to_string(payload_);
    }
    return "?";
  }

  static std::optional<Value> parse(const std::string& s) {
    if (s == "bot") return bot();
    if (s == "true") return boolean(true);
    if (s == "false") return boolean(false);
    try {
      std::size_t used = 0;
      int v = std::stoi(s, &used);
      if (used == s.size()) return integer(v);
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }

 private:
  constexpr Value(Tag t, int p) : tag_(t), payload_(p) {}

  Tag tag_;
  int payload_;
};

inline constexpr Value kBot = Value::bot();
inline constexpr Value kFalse = Value::boolean(false);
inline constexpr Value kTrue = Value::boolean(true);
inline constexpr Value kMinusOne = Value::integer(-1);
inline constexpr Value kZero = Value::integer(0);
inline constexpr Value kOne = Value::integer(1);

// Register families. R1/C1/R2 are indexed by round; T is a scratch family
// indexed by process id, used by composed task programs.
enum class RegName : std::uint8_t { R1, C1, R2, T };

inline std::string reg_name_str(RegName n) {
  switch (n) {
    case RegName::R1:
      return "R1";
    case RegName::C1:
      return "C1";
    case RegName::R2:
      return "R2";
    case RegName::T:
      return "T";
  }
  return "?";
}

struct RegisterId {
  RegName name = RegName::R1;
  long index = 0;

  friend constexpr bool operator==(RegisterId a, RegisterId b) {
    return a.name == b.name && a.index == b.index;
  }
  friend constexpr bool operator!=(RegisterId a, RegisterId b) { return !(a == b); }
  friend constexpr bool operator<(RegisterId a, RegisterId b) {
    return a.name != b.name ? a.name < b.name : a.index < b.index;
  }

  std::string str() const { return reg_name_str(name) + "[" + std::to_string(index) + "]"; }

  static std::optional<RegisterId> parse(const std::string& s) {
    auto lb = s.find('[');
    if (lb == std::string::npos || s.back() != ']') return std::nullopt;
    std::string base = s.substr(0, lb);
    std::string idx = s.substr(lb + 1, s.size() - lb - 2);
    RegName name;
    if (base == "R1")
      name = RegName::R1;
    else if (base == "C1")
      name = RegName::C1;
    else if (base == "R2")
      name = RegName::R2;
    else if (base == "T")
      name = RegName::T;
    else
      return std::nullopt;
    try {
      std::size_t used = 0;
      long v = std::stol(idx, &used);
      if (used != idx.size() || v < 0) return std::nullopt;
      return RegisterId{name, v};
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
};

inline constexpr Value initial_value(RegName n) {
  switch (n) {
    case RegName::R1:
      return kBot;
    case RegName::C1:
      return kMinusOne;
    case RegName::R2:
      return kFalse;
    case RegName::T:
      return kBot;
  }
  return kBot;
}

inline constexpr Value initial_value(RegisterId r) { return initial_value(r.name); }

}  // namespace regsim
