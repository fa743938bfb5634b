#include "selrad_cli/locator.hpp"

#include <cctype>
#include <vector>

namespace selrad::cli {

std::string pointer_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

int line_of_offset(std::string_view text, std::size_t offset) {
  int line = 1;
  for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
    if (text[k] == '\n') ++line;
  }
  return line;
}

namespace {

struct Frame {
  bool object;
  std::string pointer;
  std::size_t next_index = 0;
  bool expect_key = true;
};

}  // namespace

Locator::Locator(std::string_view text) {
  std::vector<Frame> stack;
  int line = 1;
  std::size_t k = 0;
  lines_[""] = 1;

  // Pointer of the value that starts at the current position, if inside an array.
  auto element_pointer = [&]() -> std::string {
    Frame& f = stack.back();
    return f.pointer + "/" + std::to_string(f.next_index++);
  };

  auto read_string = [&]() {
    std::string s;
    ++k;
    while (k < text.size() && text[k] != '"') {
      if (text[k] == '\\' && k + 1 < text.size()) {
        s += text[k];
        ++k;
      }
      if (text[k] == '\n') ++line;
      s += text[k];
      ++k;
    }
    ++k;
    return s;
  };

  std::string pending;  // pointer of the value about to start
  while (k < text.size()) {
    const char c = text[k];
    if (c == '\n') {
      ++line;
      ++k;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ':') {
      if (c == ',' && !stack.empty() && stack.back().object) stack.back().expect_key = true;
      ++k;
      continue;
    }
    const bool in_array = !stack.empty() && !stack.back().object;
    if (c == '}' || c == ']') {
      stack.pop_back();
      ++k;
      continue;
    }
    if (!stack.empty() && stack.back().object && stack.back().expect_key && c == '"') {
      const int key_line = line;
      const std::string raw = read_string();
      pending = stack.back().pointer + "/" + pointer_token(raw);
      lines_[pending] = key_line;
      stack.back().expect_key = false;
      continue;
    }
    std::string here;
    if (in_array) {
      here = element_pointer();
      lines_[here] = line;
    } else {
      here = pending;
    }
    if (c == '{' || c == '[') {
      stack.push_back(Frame{c == '{', here});
      ++k;
      continue;
    }
    if (c == '"') {
      read_string();
      continue;
    }
    while (k < text.size() && text[k] != ',' && text[k] != '}' && text[k] != ']' &&
           !std::isspace(static_cast<unsigned char>(text[k]))) {
      ++k;
    }
  }
}

void Locator::mark_override(const std::string& pointer, const std::string& assignment) {
  overrides_[pointer] = assignment;
}

std::string Locator::where(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    if (auto o = overrides_.find(p); o != overrides_.end()) return "--set " + o->second;
    if (auto l = lines_.find(p); l != lines_.end()) return "line " + std::to_string(l->second);
    if (p.empty()) return "line 1";
    p = p.substr(0, p.rfind('/'));
  }
}

}  // namespace selrad::cli
