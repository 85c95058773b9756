#pragma once

// Persistent .heprep.xml format: a streaming Builder back end that never
// holds more than the open-element stack plus a bounded output buffer, and a
// strict parser back to a Document.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "heprep/builder.hpp"
#include "heprep/model.hpp"

namespace heprep {

struct XmlWriterConfig {
    bool indent = true;  // two spaces per depth
    std::size_t maxBufferedBytes = 65536;
};

inline constexpr std::string_view kFormatVersion = "2.0";

std::string xml_escape(std::string_view text);

/// Element/attribute writer with a bounded buffer. Start tags stay open until
/// the first child or the close, so empty elements self-close.
class XmlStreamWriter {
  public:
    XmlStreamWriter(std::ostream& sink, XmlWriterConfig config);

    void declaration();
    void start(std::string_view element);
    void attribute(std::string_view name, std::string_view value);
    void end();
    /// Writes the trailing newline (when indenting) and flushes the buffer.
    void close();

    std::size_t buffered_bytes() const { return buffer_.size(); }
    std::size_t peak_buffered_bytes() const { return peak_; }
    std::uint64_t bytes_flushed() const { return flushed_; }
    std::size_t depth() const { return stack_.size(); }

  private:
    struct Open {
        std::string name;
        bool hasChildren = false;
    };

    void write(std::string_view text);
    void flush();
    void seal_start_tag();
    void newline_indent(std::size_t depth);

    std::ostream& sink_;
    XmlWriterConfig config_;
    std::string buffer_;
    std::size_t peak_ = 0;
    std::uint64_t flushed_ = 0;
    std::vector<Open> stack_;
    bool startTagOpen_ = false;
    bool wroteAnything_ = false;
};

/// Streams the document as it is built. Sink failures raise IO_ERROR and
/// poison the builder.
class XmlBuilder final : public Builder {
  public:
    explicit XmlBuilder(std::ostream& sink, XmlWriterConfig config = {});

    const XmlStreamWriter& writer() const { return writer_; }

  protected:
    void on_open_type_tree(std::string_view name, std::string_view version) override;
    void on_open_type(std::string_view name) override;
    void on_att_def(const AttDef& def) override;
    void on_type_att_value(const AttValue& value) override;
    void on_close_type() override;
    void on_close_type_tree() override;
    void on_open_instance_tree(std::string_view name, std::string_view version, std::string_view typeTreeName,
                               std::string_view typeTreeVersion) override;
    void on_open_instance(std::string_view typeFullName) override;
    void on_instance_att_value(const AttValue& value) override;
    void on_point(double x, double y, double z) override;
    void on_point_att_value(const AttValue& value) override;
    void on_close_instance() override;
    void on_close_instance_tree() override;
    void on_finish() override;

  private:
    void att_value(const AttValue& value);

    XmlStreamWriter writer_;
    bool pointOpen_ = false;
};

void write_document(const Document& doc, std::ostream& out, const XmlWriterConfig& config = {});
std::string to_xml(const Document& doc, const XmlWriterConfig& config = {});

/// Throws Error with XmlSyntax, SchemaError or VersionError.
Document parse_document(std::istream& source);
Document parse_document(std::string_view text);
Document read_document_file(const std::string& path);

}  // namespace heprep
