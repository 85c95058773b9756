#include "heprep/xml.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>

#include "heprep/error.hpp"
#include "heprep/values.hpp"

namespace heprep {

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    out += "&#" + std::to_string(static_cast<int>(c)) + ";";
                } else {
                    out += c;
                }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// XmlStreamWriter

XmlStreamWriter::XmlStreamWriter(std::ostream& sink, XmlWriterConfig config) : sink_(sink), config_(config) {}

void XmlStreamWriter::flush() {
    if (buffer_.empty()) return;
    sink_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!sink_) throw Error(ErrorCode::IoError, "write to output failed");
    flushed_ += buffer_.size();
    buffer_.clear();
}

void XmlStreamWriter::write(std::string_view text) {
    if (buffer_.size() + text.size() > config_.maxBufferedBytes) flush();
    if (text.size() > config_.maxBufferedBytes) {
        sink_.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!sink_) throw Error(ErrorCode::IoError, "write to output failed");
        flushed_ += text.size();
        return;
    }
    buffer_.append(text);
    peak_ = std::max(peak_, buffer_.size());
}

void XmlStreamWriter::newline_indent(std::size_t depth) {
    if (!config_.indent || !wroteAnything_) return;
    std::string pad(1 + 2 * depth, ' ');
    pad[0] = '\n';
    write(pad);
}

void XmlStreamWriter::seal_start_tag() {
    if (startTagOpen_) {
        write(">");
        startTagOpen_ = false;
    }
}

void XmlStreamWriter::declaration() {
    write(R"(<?xml version="1.0" encoding="UTF-8"?>)");
    wroteAnything_ = true;
}

void XmlStreamWriter::start(std::string_view element) {
    seal_start_tag();
    if (!stack_.empty()) stack_.back().hasChildren = true;
    newline_indent(stack_.size());
    write("<");
    write(element);
    stack_.push_back({std::string(element), false});
    startTagOpen_ = true;
    wroteAnything_ = true;
}

void XmlStreamWriter::attribute(std::string_view name, std::string_view value) {
    std::string text;
    text.reserve(name.size() + value.size() + 4);
    text += ' ';
    text += name;
    text += "=\"";
    text += xml_escape(value);
    text += '"';
    write(text);
}

void XmlStreamWriter::end() {
    Open top = std::move(stack_.back());
    stack_.pop_back();
    if (startTagOpen_) {
        write("/>");
        startTagOpen_ = false;
        return;
    }
    if (top.hasChildren) newline_indent(stack_.size());
    write("</" + top.name + ">");
}

void XmlStreamWriter::close() {
    if (config_.indent) write("\n");
    flush();
    sink_.flush();
    if (!sink_) throw Error(ErrorCode::IoError, "flush of output failed");
}

// ---------------------------------------------------------------------------
// XmlBuilder

XmlBuilder::XmlBuilder(std::ostream& sink, XmlWriterConfig config) : writer_(sink, config) {}

void XmlBuilder::att_value(const AttValue& value) {
    writer_.start("attvalue");
    writer_.attribute("name", value.name);
    writer_.attribute("kind", kind_token(value.kind()));
    writer_.attribute("value", format_payload(value.value));
    writer_.end();
}

namespace {
// The point element is left open so trailing pointAttValue calls can nest.
struct PointCloser {
    XmlStreamWriter& w;
    bool& open;
    void operator()() {
        if (open) {
            w.end();
            open = false;
        }
    }
};
}  // namespace

void XmlBuilder::on_open_type_tree(std::string_view name, std::string_view version) {
    writer_.declaration();
    writer_.start("heprep");
    writer_.attribute("version", kFormatVersion);
    writer_.start("typetree");
    writer_.attribute("name", name);
    writer_.attribute("version", version);
}

void XmlBuilder::on_open_type(std::string_view name) {
    writer_.start("type");
    writer_.attribute("name", name);
}

void XmlBuilder::on_att_def(const AttDef& def) {
    writer_.start("attdef");
    writer_.attribute("name", def.name);
    if (!def.description.empty()) writer_.attribute("desc", def.description);
    writer_.attribute("category", to_string(def.category));
    writer_.attribute("kind", kind_token(def.kind));
    if (!def.units.empty()) writer_.attribute("units", def.units);
    writer_.end();
}

void XmlBuilder::on_type_att_value(const AttValue& value) { att_value(value); }

void XmlBuilder::on_close_type() { writer_.end(); }

void XmlBuilder::on_close_type_tree() { writer_.end(); }

void XmlBuilder::on_open_instance_tree(std::string_view name, std::string_view version,
                                       std::string_view typeTreeName, std::string_view typeTreeVersion) {
    writer_.start("instancetree");
    writer_.attribute("name", name);
    writer_.attribute("version", version);
    writer_.attribute("typetreename", typeTreeName);
    writer_.attribute("typetreeversion", typeTreeVersion);
}

void XmlBuilder::on_open_instance(std::string_view typeFullName) {
    PointCloser{writer_, pointOpen_}();
    writer_.start("instance");
    writer_.attribute("type", typeFullName);
}

void XmlBuilder::on_instance_att_value(const AttValue& value) {
    PointCloser{writer_, pointOpen_}();
    att_value(value);
}

void XmlBuilder::on_point(double x, double y, double z) {
    PointCloser{writer_, pointOpen_}();
    writer_.start("point");
    writer_.attribute("x", format_real(x));
    writer_.attribute("y", format_real(y));
    writer_.attribute("z", format_real(z));
    pointOpen_ = true;
}

void XmlBuilder::on_point_att_value(const AttValue& value) { att_value(value); }

void XmlBuilder::on_close_instance() {
    PointCloser{writer_, pointOpen_}();
    writer_.end();
}

void XmlBuilder::on_close_instance_tree() { writer_.end(); }

void XmlBuilder::on_finish() {
    writer_.end();  // heprep
    writer_.close();
}

void write_document(const Document& doc, std::ostream& out, const XmlWriterConfig& config) {
    XmlBuilder builder(out, config);
    replay_document(doc, builder);
}

std::string to_xml(const Document& doc, const XmlWriterConfig& config) {
    std::ostringstream out;
    write_document(doc, out, config);
    return out.str();
}

// ---------------------------------------------------------------------------
// Parsing: a small strict reader into a DOM, then a schema walk.

namespace {

struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<XmlNode> children;
    int line = 0;
};

constexpr int kMaxDepth = 512;

class XmlReader {
  public:
    explicit XmlReader(std::string_view text) : s_(text) {}

    XmlNode parse() {
        check_utf8();
        if (s_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
        if (peek("<?xml")) skip_past("?>", "unterminated XML declaration");
        skip_misc();
        if (peek("<!DOCTYPE")) syntax("document type declarations are not supported");
        if (at_end() || s_[pos_] != '<') syntax("expected root element");
        XmlNode root = element(0);
        skip_misc();
        if (!at_end()) syntax("content after the root element");
        return root;
    }

  private:
    [[noreturn]] void syntax(const std::string& why) const {
        throw Error(ErrorCode::XmlSyntax, "line " + std::to_string(line_) + ": " + why);
    }

    void check_utf8() {
        std::size_t i = 0;
        while (i < s_.size()) {
            auto c = static_cast<unsigned char>(s_[i]);
            std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
            bool ok = len != 0 && i + len <= s_.size();
            std::uint32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
            for (std::size_t k = 1; ok && k < len; ++k) {
                auto cc = static_cast<unsigned char>(s_[i + k]);
                ok = (cc >> 6) == 0x2;
                cp = (cp << 6) | (cc & 0x3F);
            }
            static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
            ok = ok && cp >= kMin[len] && cp <= 0x10FFFF && !(cp >= 0xD800 && cp <= 0xDFFF);
            if (!ok) {
                line_ = 1 + static_cast<int>(std::count(s_.begin(), s_.begin() + static_cast<std::ptrdiff_t>(i), '\n'));
                syntax("invalid UTF-8");
            }
            if (cp < 0x20 && cp != '\t' && cp != '\n' && cp != '\r') {
                line_ = 1 + static_cast<int>(std::count(s_.begin(), s_.begin() + static_cast<std::ptrdiff_t>(i), '\n'));
                syntax("control character U+" + std::to_string(cp) + " must be written as a character reference");
            }
            i += len;
        }
    }

    bool at_end() const { return pos_ >= s_.size(); }
    bool peek(std::string_view token) const { return s_.substr(pos_).starts_with(token); }

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < s_.size(); ++i, ++pos_) {
            if (s_[pos_] == '\n') ++line_;
        }
    }

    void skip_past(std::string_view token, const char* error) {
        auto end = s_.find(token, pos_);
        if (end == std::string_view::npos) syntax(error);
        advance(end + token.size() - pos_);
    }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
    static bool is_name_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':';
    }

    void skip_space() {
        while (!at_end() && is_space(s_[pos_])) advance(1);
    }

    void skip_misc() {
        while (true) {
            skip_space();
            if (peek("<!--")) {
                skip_past("-->", "unterminated comment");
            } else {
                return;
            }
        }
    }

    std::string name() {
        std::size_t start = pos_;
        while (!at_end() && is_name_char(s_[pos_])) advance(1);
        if (start == pos_) syntax("expected a name");
        return std::string(s_.substr(start, pos_ - start));
    }

    void append_utf8(std::string& out, unsigned long cp) {
        if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) syntax("invalid character reference");
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

    std::string attribute_value() {
        if (at_end() || (s_[pos_] != '"' && s_[pos_] != '\'')) syntax("expected quoted attribute value");
        char quote = s_[pos_];
        advance(1);
        std::string out;
        while (true) {
            if (at_end()) syntax("unterminated attribute value");
            char c = s_[pos_];
            if (c == quote) {
                advance(1);
                return out;
            }
            if (c == '<') syntax("'<' in attribute value");
            if (c == '&') {
                auto semi = s_.find(';', pos_);
                if (semi == std::string_view::npos || semi - pos_ > 12) syntax("unterminated entity reference");
                std::string_view ent = s_.substr(pos_ + 1, semi - pos_ - 1);
                if (ent == "amp") out += '&';
                else if (ent == "lt") out += '<';
                else if (ent == "gt") out += '>';
                else if (ent == "quot") out += '"';
                else if (ent == "apos") out += '\'';
                else if (ent.starts_with("#x") && ent.size() > 2) {
                    unsigned long cp = 0;
                    auto [p, ec] = std::from_chars(ent.data() + 2, ent.data() + ent.size(), cp, 16);
                    if (ec != std::errc{} || p != ent.data() + ent.size()) syntax("bad character reference");
                    append_utf8(out, cp);
                } else if (ent.starts_with("#") && ent.size() > 1) {
                    unsigned long cp = 0;
                    auto [p, ec] = std::from_chars(ent.data() + 1, ent.data() + ent.size(), cp, 10);
                    if (ec != std::errc{} || p != ent.data() + ent.size()) syntax("bad character reference");
                    append_utf8(out, cp);
                } else {
                    syntax("unknown entity '&" + std::string(ent) + ";'");
                }
                advance(semi + 1 - pos_);
                continue;
            }
            // Attribute-value normalization for literal whitespace.
            out += (c == '\n' || c == '\t' || c == '\r') ? ' ' : c;
            advance(1);
        }
    }

    XmlNode element(int depth) {
        if (depth > kMaxDepth) syntax("elements nested too deeply");
        XmlNode node;
        node.line = line_;
        advance(1);  // '<'
        node.name = name();
        while (true) {
            bool spaced = !at_end() && is_space(s_[pos_]);
            skip_space();
            if (at_end()) syntax("unterminated start tag <" + node.name + ">");
            if (peek("/>")) {
                advance(2);
                return node;
            }
            if (s_[pos_] == '>') {
                advance(1);
                break;
            }
            if (!spaced) syntax("expected whitespace between attributes");
            std::string key = name();
            skip_space();
            if (at_end() || s_[pos_] != '=') syntax("expected '=' after attribute " + key);
            advance(1);
            skip_space();
            std::string value = attribute_value();
            for (const auto& [k, v] : node.attrs) {
                if (k == key) syntax("duplicate attribute '" + key + "' on <" + node.name + ">");
            }
            node.attrs.emplace_back(std::move(key), std::move(value));
        }
        while (true) {
            std::size_t textStart = pos_;
            int textLine = line_;
            while (!at_end() && s_[pos_] != '<') advance(1);
            if (at_end()) syntax("missing </" + node.name + ">");
            for (std::size_t i = textStart; i < pos_; ++i) {
                if (!is_space(s_[i])) {
                    throw Error(ErrorCode::SchemaError,
                                "line " + std::to_string(textLine) + ": text content is not allowed in <" + node.name + ">");
                }
            }
            if (peek("<!--")) {
                skip_past("-->", "unterminated comment");
            } else if (peek("<![CDATA[")) {
                throw Error(ErrorCode::SchemaError,
                            "line " + std::to_string(line_) + ": CDATA is not allowed in <" + node.name + ">");
            } else if (peek("<?") || peek("<!")) {
                syntax("unexpected markup declaration");
            } else if (peek("</")) {
                advance(2);
                std::string closing = name();
                skip_space();
                if (at_end() || s_[pos_] != '>') syntax("malformed end tag </" + closing);
                advance(1);
                if (closing != node.name) syntax("</" + closing + "> does not match <" + node.name + ">");
                return node;
            } else {
                node.children.push_back(element(depth + 1));
            }
        }
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

[[noreturn]] void schema(const XmlNode& node, const std::string& why) {
    throw Error(ErrorCode::SchemaError, "line " + std::to_string(node.line) + ": <" + node.name + "> " + why);
}

// Checked attribute access: unknown attributes and missing required ones fail.
class Attrs {
  public:
    Attrs(const XmlNode& node, std::initializer_list<std::string_view> required,
          std::initializer_list<std::string_view> optional = {})
        : node_(node) {
        for (const auto& [k, v] : node.attrs) {
            bool known = std::find(required.begin(), required.end(), k) != required.end() ||
                         std::find(optional.begin(), optional.end(), k) != optional.end();
            if (!known) schema(node, "has unknown attribute '" + k + "'");
        }
        for (auto r : required) {
            if (!find(r)) schema(node, "is missing required attribute '" + std::string(r) + "'");
        }
    }

    const std::string& operator[](std::string_view key) const { return *find(key); }
    std::string get_or_empty(std::string_view key) const {
        const std::string* v = find(key);
        return v ? *v : std::string();
    }

    double real(std::string_view key) const {
        auto v = parse_real((*this)[key]);
        if (!v) schema(node_, "attribute '" + std::string(key) + "' is not a finite number: '" + (*this)[key] + "'");
        return *v;
    }

  private:
    const std::string* find(std::string_view key) const {
        for (const auto& [k, v] : node_.attrs) {
            if (k == key) return &v;
        }
        return nullptr;
    }

    const XmlNode& node_;
};

AttValueKind kind_attr(const XmlNode& node, const Attrs& a) {
    auto kind = parse_kind_token(a["kind"]);
    if (!kind) schema(node, "has unknown kind '" + a["kind"] + "'");
    return *kind;
}

AttValue read_att_value(const XmlNode& node) {
    if (!node.children.empty()) schema(node, "must be empty");
    Attrs a(node, {"name", "kind", "value"});
    AttValueKind kind = kind_attr(node, a);
    auto payload = parse_payload(kind, a["value"]);
    if (!payload) schema(node, "value '" + a["value"] + "' is not a valid " + std::string(kind_token(kind)));
    return {a["name"], std::move(*payload)};
}

AttDef read_att_def(const XmlNode& node) {
    if (!node.children.empty()) schema(node, "must be empty");
    Attrs a(node, {"name", "category", "kind"}, {"desc", "units"});
    auto category = parse_category(a["category"]);
    if (!category) schema(node, "has unknown category '" + a["category"] + "'");
    return {a["name"], a.get_or_empty("desc"), *category, kind_attr(node, a), a.get_or_empty("units")};
}

Type read_type(const XmlNode& node) {
    Attrs a(node, {"name"});
    Type type{a["name"], {}, {}, {}};
    for (const auto& child : node.children) {
        if (child.name == "attdef") type.attDefs.push_back(read_att_def(child));
        else if (child.name == "attvalue") type.attValues.push_back(read_att_value(child));
        else if (child.name == "type") type.subTypes.push_back(read_type(child));
        else schema(child, "is not allowed inside <type>");
    }
    return type;
}

Point read_point(const XmlNode& node) {
    Attrs a(node, {"x", "y", "z"});
    Point p{a.real("x"), a.real("y"), a.real("z"), {}};
    for (const auto& child : node.children) {
        if (child.name != "attvalue") schema(child, "is not allowed inside <point>");
        p.attValues.push_back(read_att_value(child));
    }
    return p;
}

Instance read_instance(const XmlNode& node) {
    Attrs a(node, {"type"});
    Instance inst{a["type"], {}, {}, {}};
    for (const auto& child : node.children) {
        if (child.name == "attvalue") inst.attValues.push_back(read_att_value(child));
        else if (child.name == "point") inst.points.push_back(read_point(child));
        else if (child.name == "instance") inst.subInstances.push_back(read_instance(child));
        else schema(child, "is not allowed inside <instance>");
    }
    return inst;
}

Document read_root(const XmlNode& root) {
    if (root.name != "heprep") schema(root, "is not a HepRep document (expected <heprep>)");
    Attrs ra(root, {"version"});
    if (ra["version"] != kFormatVersion) {
        throw Error(ErrorCode::VersionError, "unsupported HepRep version '" + ra["version"] + "', expected " +
                                                 std::string(kFormatVersion));
    }
    const XmlNode* typeTree = nullptr;
    const XmlNode* instanceTree = nullptr;
    for (const auto& child : root.children) {
        if (child.name == "typetree" && !typeTree && !instanceTree) typeTree = &child;
        else if (child.name == "instancetree" && typeTree && !instanceTree) instanceTree = &child;
        else schema(child, "is unexpected here; <heprep> holds one <typetree> followed by one <instancetree>");
    }
    if (!typeTree) schema(root, "is missing <typetree>");
    if (!instanceTree) schema(root, "is missing <instancetree>");

    Document doc;
    Attrs ta(*typeTree, {"name", "version"});
    doc.typeTree.name = ta["name"];
    doc.typeTree.version = ta["version"];
    for (const auto& child : typeTree->children) {
        if (child.name != "type") schema(child, "is not allowed inside <typetree>");
        doc.typeTree.rootTypes.push_back(read_type(child));
    }
    Attrs ia(*instanceTree, {"name", "version", "typetreename", "typetreeversion"});
    doc.instanceTree.name = ia["name"];
    doc.instanceTree.version = ia["version"];
    doc.instanceTree.typeTreeName = ia["typetreename"];
    doc.instanceTree.typeTreeVersion = ia["typetreeversion"];
    for (const auto& child : instanceTree->children) {
        if (child.name != "instance") schema(child, "is not allowed inside <instancetree>");
        doc.instanceTree.rootInstances.push_back(read_instance(child));
    }
    return doc;
}

}  // namespace

Document parse_document(std::string_view text) { return read_root(XmlReader(text).parse()); }

Document parse_document(std::istream& source) {
    std::string text((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
    if (source.bad()) throw Error(ErrorCode::IoError, "read from input failed");
    return parse_document(std::string_view(text));
}

Document read_document_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    return parse_document(in);
}

}  // namespace heprep
