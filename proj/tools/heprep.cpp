// heprep: serve a live event loop, export events as XML, validate and query files.

#include <signal.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "heprep/builder.hpp"
#include "heprep/error.hpp"
#include "heprep/fillers.hpp"
#include "heprep/query.hpp"
#include "heprep/session.hpp"
#include "heprep/values.hpp"
#include "heprep/wire.hpp"
#include "heprep/xml.hpp"

namespace fs = std::filesystem;
using namespace heprep;

namespace {

enum Exit { kOk = 0, kUsage = 1, kViolations = 2, kIo = 3 };

std::mutex logMutex;

void log_line(const std::string& text) {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%H:%M:%S", &tm);
    std::lock_guard lock(logMutex);
    std::cerr << stamp << " " << text << std::endl;
}

EventConfig event_config(double smear, double outlier) {
    EventConfig config;
    config.smearSigma = smear;
    config.outlierProbability = outlier;
    return config;
}

std::string event_file_name(std::int64_t eventId) {
    char name[64];
    std::snprintf(name, sizeof name, "event_%06lld.heprep.xml", static_cast<long long>(eventId));
    return name;
}

int serve(std::uint16_t port, std::optional<std::uint64_t> seed, const std::string& bind, const EventConfig& config) {
    if (!seed) {
        std::random_device rd;
        seed = (std::uint64_t(rd()) << 32) | rd();
        log_line("no --seed given, using " + std::to_string(*seed));
    }
    Session session(*seed, config);
    session.next_event();

    // Block the signals before the worker threads exist so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    wire::Server server(session, {bind, port, 4}, log_line);
    try {
        server.start();
    } catch (const Error& e) {
        std::cerr << "heprep serve: " << e.detail() << "\n";
        return kIo;
    }
    log_line("serving seed " + std::to_string(*seed) + " on " + bind + " tcp " + std::to_string(server.tcp_port()) +
             ", websocket " + std::to_string(server.ws_port()) + std::string(wire::kWebSocketPath));
    int received = 0;
    sigwait(&signals, &received);
    log_line("shutting down");
    server.stop();
    return kOk;
}

int export_events(std::uint64_t seed, std::int64_t events, const fs::path& out, const std::vector<std::string>& types,
                  const EventConfig& config) {
    FillerRegistry registry = standard_registry();
    InstanceRequest request;
    NameSet known;
    for (const auto& filler : registry.fillers()) {
        for (const auto& name : filler->type_names()) known.insert(name);
    }
    for (const auto& t : types) {
        if (!known.count(t)) {
            std::cerr << "heprep export: unknown type '" << t << "'\n";
            return kUsage;
        }
        request.typeNames.insert(t);
    }

    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) {
        std::cerr << "heprep export: cannot create " << out << ": " << ec.message() << "\n";
        return kIo;
    }
    for (std::int64_t id = 1; id <= events; ++id) {
        fs::path file = out / event_file_name(id);
        std::ofstream sink(file, std::ios::binary | std::ios::trunc);
        if (!sink) {
            std::cerr << "heprep export: cannot write " << file << "\n";
            return kIo;
        }
        try {
            Event event = generate_event(seed, id, config);
            XmlBuilder builder(sink);
            build_event(registry, event, request, builder);
        } catch (const Error& e) {
            std::cerr << "heprep export: " << file << ": " << e.what() << "\n";
            return kIo;
        }
        sink.close();
        if (!sink) {
            std::cerr << "heprep export: write failed for " << file << "\n";
            return kIo;
        }
    }
    return kOk;
}

int validate(const std::string& path) {
    Document doc;
    try {
        doc = read_document_file(path);
    } catch (const Error& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return kIo;
    }
    auto violations = validate_document(doc);
    for (const auto& v : violations) std::cerr << to_string(v.kind) << " " << v.location << ": " << v.message << "\n";
    return violations.empty() ? kOk : kViolations;
}

int query(const std::string& path, const InstanceRequest& request) {
    Document doc;
    try {
        doc = read_document_file(path);
    } catch (const Error& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return kIo;
    }
    auto paths = selected_paths(doc, request);
    std::set<std::string> selected;
    for (const auto& p : paths) selected.insert(p.str());

    InstanceTree result = get_instances(doc, request);
    for_each_instance(result, [&](const Instance& inst, const InstancePath&) {
        std::string origPath;
        std::string line;
        for (const auto& v : inst.attValues) {
            if (v.name == kOrigPathAttribute) {
                origPath = std::get<std::string>(v.value);
            } else {
                line += "\t" + v.name + "=" + format_payload(v.value);
            }
        }
        if (selected.count(origPath)) std::cout << origPath << "\t" << inst.typeFullName << line << "\n";
    });
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HepRep event display server and file tools"};
    app.require_subcommand(1);

    double smear = EventConfig{}.smearSigma;
    double outlier = EventConfig{}.outlierProbability;

    auto* serveCmd = app.add_subcommand("serve", "Run the live server for a remote viewer");
    std::uint16_t port = wire::kDefaultPort;
    std::optional<std::uint64_t> serveSeed;
    std::string bind = "127.0.0.1";
    serveCmd->add_option("--port", port, "TCP port; WebSocket uses port+1")->capture_default_str();
    serveCmd->add_option("--seed", serveSeed, "Generator seed (default: from entropy)");
    serveCmd->add_option("--bind", bind, "Listen address")->capture_default_str();
    serveCmd->add_option("--smear", smear, "Hit smearing sigma in mm")->capture_default_str()->check(CLI::NonNegativeNumber);
    serveCmd->add_option("--outlier", outlier, "Outlier injection probability")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    auto* exportCmd = app.add_subcommand("export", "Write events as .heprep.xml files");
    std::uint64_t exportSeed = 0;
    std::int64_t events = 0;
    std::string outDir;
    std::vector<std::string> types;
    exportCmd->add_option("--seed", exportSeed, "Generator seed")->required();
    exportCmd->add_option("--events", events, "Number of events")->required()->check(CLI::PositiveNumber);
    exportCmd->add_option("--out", outDir, "Output directory")->required();
    exportCmd->add_option("--types", types, "Comma-separated type names to fill")->delimiter(',');
    exportCmd->add_option("--smear", smear, "Hit smearing sigma in mm")->check(CLI::NonNegativeNumber);
    exportCmd->add_option("--outlier", outlier, "Outlier injection probability")->check(CLI::Range(0.0, 1.0));

    auto* validateCmd = app.add_subcommand("validate", "Parse and validate a .heprep.xml file");
    std::string validateFile;
    validateCmd->add_option("FILE", validateFile)->required();

    auto* queryCmd = app.add_subcommand("query", "Select instances from a .heprep.xml file");
    std::string queryFile;
    std::vector<std::string> queryTypes, wheres, excludes, includes;
    std::optional<int> maxDepth;
    queryCmd->add_option("FILE", queryFile)->required();
    queryCmd->add_option("--type", queryTypes, "Type full name to select (repeatable)");
    queryCmd->add_option("--where", wheres, "Predicate such as \"Chi2>0\" (repeatable)");
    queryCmd->add_option("--exclude-att", excludes, "Attribute to drop (repeatable)");
    queryCmd->add_option("--include-att", includes, "Attribute to keep (repeatable)");
    queryCmd->add_option("--max-depth", maxDepth, "Deepest level to visit; roots are 1");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    if (*serveCmd) return serve(port, serveSeed, bind, event_config(smear, outlier));
    if (*exportCmd) return export_events(exportSeed, events, outDir, types, event_config(smear, outlier));
    if (*validateCmd) return validate(validateFile);

    InstanceRequest request;
    try {
        request.typeNames.insert(queryTypes.begin(), queryTypes.end());
        request.attExcludes.insert(excludes.begin(), excludes.end());
        request.attIncludes.insert(includes.begin(), includes.end());
        for (const auto& w : wheres) request.predicates.push_back(parse_predicate(w));
        request.maxDepth = maxDepth;
        check_request(request);
    } catch (const Error& e) {
        std::cerr << "heprep query: " << e.detail() << "\n" << queryCmd->help();
        return kUsage;
    }
    return query(queryFile, request);
}
