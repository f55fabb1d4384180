#pragma once

#include <string>
#include <string_view>

namespace meco::fetch {

struct ExtractedText {
  std::string title;
  std::string text;
};

// Tag-stripping text extraction. script/style/template/noscript content and
// comments are dropped, block-level tags become line breaks, character
// references are decoded, and whitespace is collapsed. The <title> goes to
// `title` only.
ExtractedText extract_html(std::string_view html);

// Decodes named (common subset) and numeric character references.
std::string decode_entities(std::string_view text);

}  // namespace meco::fetch
