#pragma once

#include "imrdmd/types.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace imrdmd {

/// Read-only HTTP server over a bundle directory.
///
/// Every file is loaded at construction; nothing is read from disk or
/// modified afterwards, so concurrent requests see identical bytes.
///   GET /bundle/<name>  -> <dir>/<name>.json
///   GET /               -> <dir>/index.html when present
///   GET /<path>         -> the file at that relative path
/// Anything else is 404.
class BundleServer {
public:
    explicit BundleServer(const std::filesystem::path& dir);
    ~BundleServer();
    BundleServer(const BundleServer&) = delete;
    BundleServer& operator=(const BundleServer&) = delete;

    /// Binds; port 0 picks a free one. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call bind() first.
    void run();
    void stop();
    bool running() const;

    std::size_t file_count() const { return files_.size(); }

private:
    struct Impl;
    std::map<std::string, std::string> files_;
    std::unique_ptr<Impl> impl_;
};

/// Blocking convenience wrapper used by the CLI.
void serve_bundle(const std::filesystem::path& dir, const std::string& host, int port);

} // namespace imrdmd
