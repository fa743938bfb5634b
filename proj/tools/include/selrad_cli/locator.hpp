#pragma once

#include <map>
#include <string>
#include <string_view>

namespace selrad::cli {

/// Maps JSON pointers ("/physics/kappa", "/protocols/0/kind") to 1-based source lines.
class Locator {
 public:
  Locator() = default;
  /// Scans syntactically valid JSON text and records the line of every member and element.
  explicit Locator(std::string_view text);

  /// Marks a pointer as coming from a command-line override.
  void mark_override(const std::string& pointer, const std::string& assignment);

  /// "line N" for the pointer or its closest located ancestor, or the override text.
  std::string where(const std::string& pointer) const;

 private:
  std::map<std::string, int> lines_;
  std::map<std::string, std::string> overrides_;
};

/// 1-based line of a byte offset within `text`.
int line_of_offset(std::string_view text, std::size_t offset);

/// Escapes a member name for use as a JSON pointer token.
std::string pointer_token(std::string_view key);

}  // namespace selrad::cli
