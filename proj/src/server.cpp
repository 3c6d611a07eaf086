#include "imrdmd/server.hpp"

#include "httplib.h"

#include <fstream>
#include <iostream>
#include <iterator>

namespace imrdmd {
namespace {

std::string content_type(const std::string& path) {
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "json") return "application/json";
    if (ext == "html") return "text/html; charset=utf-8";
    if (ext == "js" || ext == "mjs") return "text/javascript";
    if (ext == "css") return "text/css";
    if (ext == "svg") return "image/svg+xml";
    if (ext == "png") return "image/png";
    if (ext == "csv") return "text/csv";
    return "application/octet-stream";
}

} // namespace

struct BundleServer::Impl {
    httplib::Server http;
};

BundleServer::BundleServer(const std::filesystem::path& dir) : impl_(std::make_unique<Impl>()) {
    if (!std::filesystem::is_directory(dir)) throw Error("bundle directory " + dir.string() + " not found");
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) throw Error("cannot read " + entry.path().string());
        const std::string rel = std::filesystem::relative(entry.path(), dir).generic_string();
        files_[rel].assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    impl_->http.Get(R"(/bundle/([A-Za-z0-9_.-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto it = files_.find(req.matches[1].str() + ".json");
        if (it == files_.end()) {
            res.status = 404;
            res.set_content("not found", "text/plain");
            return;
        }
        res.set_content(it->second, "application/json");
    });
    impl_->http.Get(R"(/(.*))", [this](const httplib::Request& req, httplib::Response& res) {
        std::string rel = req.matches[1].str();
        if (rel.empty()) rel = "index.html";
        auto it = rel.find("..") == std::string::npos ? files_.find(rel) : files_.end();
        if (it == files_.end()) {
            res.status = 404;
            res.set_content("not found", "text/plain");
            return;
        }
        res.set_content(it->second, content_type(rel));
    });
}

BundleServer::~BundleServer() { stop(); }

int BundleServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->http.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!impl_->http.bind_to_port(host, port)) {
        throw Error("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void BundleServer::run() { impl_->http.listen_after_bind(); }

void BundleServer::stop() {
    if (impl_) impl_->http.stop();
}

bool BundleServer::running() const { return impl_->http.is_running(); }

void serve_bundle(const std::filesystem::path& dir, const std::string& host, int port) {
    BundleServer server(dir);
    const int bound = server.bind(host, port);
    std::cerr << "serving " << server.file_count() << " files from " << dir.string() << " on http://" << host
              << ":" << bound << "\n";
    server.run();
}

} // namespace imrdmd
