// Python access to the core library. Trees cross the boundary as the same
// JSON text the wire protocol uses; the package turns it into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "heprep/builder.hpp"
#include "heprep/error.hpp"
#include "heprep/fillers.hpp"
#include "heprep/json_codec.hpp"
#include "heprep/query.hpp"
#include "heprep/session.hpp"
#include "heprep/values.hpp"
#include "heprep/wire.hpp"
#include "heprep/xml.hpp"

namespace py = pybind11;
using namespace heprep;

namespace {

InstanceRequest request_from_text(const std::string& text) {
    return request_from_json(text.empty() ? Json(nullptr) : Json::parse(text));
}

Json document_json(const Document& doc) {
    return {{"typetree", to_json(doc.typeTree)}, {"instancetree", to_json(doc.instanceTree)}};
}

std::string export_event(std::uint64_t seed, std::int64_t eventId, const std::string& requestJson, bool indent) {
    std::ostringstream out;
    XmlBuilder builder(out, {indent, 65536});
    build_event(standard_registry(), generate_event(seed, eventId), request_from_text(requestJson), builder);
    return out.str();
}

std::vector<std::tuple<std::string, std::string, std::string>> validate_xml(const std::string& xml) {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& v : validate_document(parse_document(xml))) {
        out.emplace_back(std::string(to_string(v.kind)), v.location, v.message);
    }
    return out;
}

class PyServer {
  public:
    PyServer(std::uint64_t seed, std::uint16_t port, const std::string& bind)
        : session_(seed), server_(session_, {bind, port, 2}) {
        session_.next_event();
    }
    void start() {
        py::gil_scoped_release release;
        server_.start();
    }
    void stop() {
        py::gil_scoped_release release;
        server_.stop();
    }
    std::uint16_t tcp_port() const { return server_.tcp_port(); }
    std::uint16_t ws_port() const { return server_.ws_port(); }

  private:
    Session session_;
    wire::Server server_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "HepRep core bindings";

    static py::exception<Error> heprepError(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = heprepError;
            PyErr_SetObject(exc.ptr(), py::make_tuple(std::string(to_string(e.code())), e.detail()).ptr());
        }
    });

    m.attr("FORMAT_VERSION") = std::string(kFormatVersion);
    m.attr("PROTOCOL_VERSION") = std::string(wire::kProtocolVersion);

    m.def("format_real", &format_real);
    m.def("canonical_predicate", [](const std::string& text) { return format_predicate(parse_predicate(text)); });

    m.def("export_event", &export_event, py::arg("seed"), py::arg("event_id"), py::arg("request_json") = "",
          py::arg("indent") = true);
    m.def("parse_xml", [](const std::string& xml) { return document_json(parse_document(xml)).dump(); });
    m.def("validate_xml", &validate_xml);
    m.def("query_xml", [](const std::string& xml, const std::string& requestJson) {
        return to_json(get_instances(parse_document(xml), request_from_text(requestJson))).dump();
    });
    m.def("tree_top_xml",
          [](const std::string& xml) { return to_json(get_instance_tree_top(parse_document(xml))).dump(); });

    py::class_<Session>(m, "Session")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def_property_readonly("seed", &Session::seed)
        .def_property_readonly("event_id", &Session::event_id)
        .def("next_event", &Session::next_event)
        .def("type_tree", [](Session& s) { return to_json(get_type_tree(*s.document())).dump(); })
        .def("get_instances",
             [](Session& s, const std::string& requestJson) {
                 return to_json(get_instances(*s.document(), request_from_text(requestJson))).dump();
             })
        .def("apply_action",
             [](Session& s, const std::string& name, const std::string& targetPath, const std::map<std::string, std::int64_t>& args) {
                 ActionInvocation inv{name, InstancePath::parse(targetPath), {}};
                 for (const auto& [k, v] : args) inv.args[k] = v;
                 s.apply_action(inv);
             })
        .def("run_algorithm", [](Session& s, const std::string& name) {
            auto r = s.run_algorithm(name);
            return std::make_tuple(r.name, r.status, r.summary);
        });

    py::class_<PyServer>(m, "Server")
        .def(py::init<std::uint64_t, std::uint16_t, const std::string&>(), py::arg("seed"), py::arg("port") = 0,
             py::arg("bind") = "127.0.0.1")
        .def("start", &PyServer::start)
        .def("stop", &PyServer::stop)
        .def_property_readonly("tcp_port", &PyServer::tcp_port)
        .def_property_readonly("ws_port", &PyServer::ws_port);
}
