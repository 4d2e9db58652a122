// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffx/error.hpp"

namespace diffx {

struct LogEntry {
    std::string ts;
    std::string session;
    std::string event;
    nlohmann::ordered_json record;  // null when the event carries no record
};

inline std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - secs).count();
    const std::time_t t = std::chrono::system_clock::to_time_t(secs);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

/// Append-only JSON Lines log, one `{"ts", "session", "event", "record"}`
/// object per line. Each append is flushed before it returns.
class EventLog {
public:
    explicit EventLog(std::filesystem::path path) : path_(std::move(path)) {
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        drop_torn_tail();
        out_.open(path_, std::ios::binary | std::ios::app);
        if (!out_) raise(ErrorCode::IoError, "cannot open event log " + path_.string());
    }

    void append(const std::string& session, const std::string& event, const nlohmann::ordered_json& record) {
        nlohmann::ordered_json j;
        j["ts"] = iso8601_now();
        j["session"] = session;
        j["event"] = event;
        j["record"] = record;
        const std::string line = j.dump() + "\n";
        std::lock_guard lock(mutex_);
        out_.write(line.data(), static_cast<std::streamsize>(line.size()));
        out_.flush();
        if (!out_) raise(ErrorCode::IoError, "event log write failed");
    }

    /// Every complete entry in file order. A malformed line before the end
    /// is corruption (ParseError); an unterminated final line is a torn write
    /// and is ignored.
    static std::vector<LogEntry> read(const std::filesystem::path& path) {
        std::vector<LogEntry> entries;
        std::ifstream in(path, std::ios::binary);
        if (!in) return entries;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (in.eof()) break;  // no trailing newline
            if (line.empty()) continue;
            try {
                const auto j = nlohmann::ordered_json::parse(line);
                entries.push_back({j.at("ts").get<std::string>(), j.at("session").get<std::string>(),
                                   j.at("event").get<std::string>(), j.at("record")});
            } catch (const nlohmann::json::exception& e) {
                raise(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        return entries;
    }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void drop_torn_tail() {
        if (!std::filesystem::exists(path_)) return;
        const auto size = std::filesystem::file_size(path_);
        if (size == 0) return;
        std::ifstream in(path_, std::ios::binary);
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (data.back() == '\n') return;
        const auto keep = data.rfind('\n');
        std::filesystem::resize_file(path_, keep == std::string::npos ? 0 : keep + 1);
    }

    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace diffx
