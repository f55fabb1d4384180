#include "meco/fetch/html.hpp"

#include <array>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

#include "meco/core/text.hpp"

namespace meco::fetch {

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    cp = 0xFFFD;
  }
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

const std::unordered_map<std::string_view, std::uint32_t>& named_entities() {
  static const std::unordered_map<std::string_view, std::uint32_t> table{
      {"amp", '&'},      {"lt", '<'},        {"gt", '>'},        {"quot", '"'},      {"apos", '\''},
      {"nbsp", 0xA0},    {"copy", 0xA9},     {"reg", 0xAE},      {"trade", 0x2122},  {"mdash", 0x2014},
      {"ndash", 0x2013}, {"hellip", 0x2026}, {"laquo", 0xAB},    {"raquo", 0xBB},    {"lsquo", 0x2018},
      {"rsquo", 0x2019}, {"ldquo", 0x201C},  {"rdquo", 0x201D},  {"bull", 0x2022},   {"middot", 0xB7},
      {"eacute", 0xE9},  {"egrave", 0xE8},   {"ecirc", 0xEA},    {"agrave", 0xE0},   {"aacute", 0xE1},
      {"acirc", 0xE2},   {"ccedil", 0xE7},   {"ocirc", 0xF4},    {"ouml", 0xF6},     {"uuml", 0xFC},
      {"auml", 0xE4},    {"szlig", 0xDF},    {"ntilde", 0xF1},   {"iacute", 0xED},   {"oacute", 0xF3},
      {"uacute", 0xFA},  {"Eacute", 0xC9},   {"deg", 0xB0},      {"euro", 0x20AC},   {"pound", 0xA3},
      {"times", 0xD7},   {"shy", 0xAD},
  };
  return table;
}

const std::unordered_set<std::string_view>& block_tags() {
  static const std::unordered_set<std::string_view> tags{
      "address", "article", "aside",  "blockquote", "br",     "dd",      "div",    "dl",     "dt",
      "fieldset", "figcaption", "figure", "footer", "form",   "h1",      "h2",     "h3",     "h4",
      "h5",      "h6",      "header", "hr",         "li",     "main",    "nav",    "ol",     "p",
      "pre",     "section", "table",  "tbody",      "td",     "tfoot",   "th",     "thead",  "tr",
      "ul",      "body",    "html",   "head",       "option", "caption", "center", "summary", "details",
  };
  return tags;
}

bool is_raw_text_tag(std::string_view name) {
  return name == "script" || name == "style" || name == "template" || name == "noscript" || name == "textarea";
}

// Finds "</name" case-insensitively from pos; npos when absent.
std::size_t find_close_tag(std::string_view html, std::size_t pos, std::string_view name) {
  while (true) {
    pos = html.find("</", pos);
    if (pos == std::string_view::npos) {
      return pos;
    }
    if (ascii_lower(html.substr(pos + 2, name.size())) == name) {
      return pos;
    }
    pos += 2;
  }
}

// Position just past the '>' ending the tag opened at `pos`, honoring quoted
// attribute values. npos when unterminated.
std::size_t skip_tag(std::string_view html, std::size_t pos) {
  char quote = 0;
  for (std::size_t i = pos; i < html.size(); ++i) {
    char c = html[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += c;
  }
  return out;
}

// Collapses whitespace inside each line and drops empty lines.
std::string normalize_lines(std::string_view raw) {
  std::string out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    auto end = raw.find('\n', start);
    if (end == std::string_view::npos) {
      end = raw.size();
    }
    // NBSP (U+00A0) counts as a space for layout purposes.
    std::string line(raw.substr(start, end - start));
    for (std::size_t p; (p = line.find("\xC2\xA0")) != std::string::npos;) {
      line.replace(p, 2, " ");
    }
    auto collapsed = collapse_whitespace(line);
    if (!collapsed.empty()) {
      if (!out.empty()) {
        out += '\n';
      }
      out += collapsed;
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out += text[i++];
      continue;
    }
    auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += text[i++];
      continue;
    }
    auto name = text.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      std::uint32_t cp = 0;
      bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
      auto digits = name.substr(hex ? 2 : 1);
      bool ok = !digits.empty();
      for (char c : digits) {
        int d = -1;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (hex && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        if (d < 0 || cp > 0x10FFFF) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
      }
      if (ok) {
        append_utf8(out, cp);
        i = semi + 1;
        continue;
      }
    } else if (auto it = named_entities().find(name); it != named_entities().end()) {
      append_utf8(out, it->second);
      i = semi + 1;
      continue;
    }
    out += text[i++];
  }
  return out;
}

ExtractedText extract_html(std::string_view html) {
  ExtractedText result;
  std::string raw;
  std::string pending_text;
  auto flush_text = [&] {
    raw += decode_entities(pending_text);
    pending_text.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    char c = html[i];
    if (c != '<') {
      pending_text += c;
      ++i;
      continue;
    }
    // Comment.
    if (html.substr(i, 4) == "<!--") {
      auto end = html.find("-->", i + 4);
      i = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    char next = i + 1 < html.size() ? html[i + 1] : '\0';
    bool closing = next == '/';
    char first = closing ? (i + 2 < html.size() ? html[i + 2] : '\0') : next;
    if (next == '!' || next == '?') {
      auto end = skip_tag(html, i + 1);
      i = end == std::string_view::npos ? html.size() : end;
      continue;
    }
    if (!is_alpha(first)) {
      // A bare '<' in text, e.g. "a < b".
      pending_text += c;
      ++i;
      continue;
    }
    std::size_t name_start = i + (closing ? 2 : 1);
    std::size_t name_end = name_start;
    while (name_end < html.size() && (is_alpha(html[name_end]) || (html[name_end] >= '0' && html[name_end] <= '9'))) {
      ++name_end;
    }
    std::string name = ascii_lower(html.substr(name_start, name_end - name_start));
    auto tag_end = skip_tag(html, name_end);
    if (tag_end == std::string_view::npos) {
      break;  // unterminated tag: nothing after it is text
    }
    flush_text();
    i = tag_end;

    if (!closing && (is_raw_text_tag(name) || name == "title")) {
      auto close = find_close_tag(html, i, name);
      auto content = html.substr(i, close == std::string_view::npos ? std::string_view::npos : close - i);
      if (name == "title" && result.title.empty()) {
        result.title = collapse_whitespace(decode_entities(content));
      }
      if (close == std::string_view::npos) {
        i = html.size();
      } else {
        auto after = skip_tag(html, close + 2);
        i = after == std::string_view::npos ? html.size() : after;
      }
      continue;
    }
    if (block_tags().contains(name)) {
      raw += '\n';
    }
  }
  flush_text();
  result.text = normalize_lines(raw);
  return result;
}

}  // namespace meco::fetch
