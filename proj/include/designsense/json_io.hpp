#pragma once

// JSON encoding of the core types.
//
// Decoding is strict about required fields and types (ParseError with the
// field path) and lenient about unknown fields, which are kept in `extra`
// and written back on encode.

#include <string>
#include <string_view>

#include "designsense/layout.hpp"
#include "designsense/preference.hpp"

namespace dsense {

Json to_json(const BBox& b);
Json to_json(const Canvas& c);
Json to_json(const Element& e);
Json to_json(const Layout& l);
Json to_json(const Verdict& v);
// Pair with inline layouts (wire form). Dataset files store references instead.
Json to_json(const PreferencePair& p);

BBox bbox_from_json(const Json& j, const std::string& path = "bbox");
Canvas canvas_from_json(const Json& j, const std::string& path = "canvas");
Element element_from_json(const Json& j, const std::string& path = "element");
// Decodes and runs check_layout; geometry errors are reported as ParseError.
Layout layout_from_json(const Json& j, const std::string& path = "layout");
Verdict verdict_from_json(const Json& j, const std::string& path = "verdict");
PreferencePair pair_from_json(const Json& j, const std::string& path = "pair");

// Parses text, wrapping syntax errors into ParseError.
Json parse_json_text(std::string_view text, const std::string& where);

Json read_json_file(const std::string& path);
// Temp file + rename so readers never observe a partial file.
void write_text_atomic(const std::string& path, const std::string& contents);
void write_json_file(const std::string& path, const Json& j);

Layout read_layout_file(const std::string& path);
void write_layout_file(const std::string& path, const Layout& l);

// Canonical text form: sorted keys, two-space indent, trailing newline.
std::string dump_pretty(const Json& j);

}  // namespace dsense
