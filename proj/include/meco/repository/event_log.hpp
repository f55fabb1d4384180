#pragma once

#include <sys/types.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "meco/knowledge/events.hpp"

namespace meco::repository {

// One event per line, UTF-8, '\n'-terminated, no other whitespace:
//   {"seq":N,"timestamp":"...Z","actor":"...","kind":"...","process":"...","payload":{...}}
// Keys appear in exactly that order; payload keys are sorted. See docs/storage.md.
std::string encode_event_line(const knowledge::ActivityEvent& event);

// Parses one line (without its terminator). Throws Error(corrupt_log) on any
// malformation, including a process that disagrees with the kind.
knowledge::ActivityEvent decode_event_line(std::string_view line, const WorkspaceId& workspace);

struct CorruptRecord {
  std::uint64_t offset = 0;  // byte offset of the record's first byte
  std::uint64_t line = 0;    // 1-based
  std::string reason;
};

struct LogReadResult {
  std::vector<knowledge::ActivityEvent> events;
  std::optional<CorruptRecord> corruption;
  // Bytes covered by the well-formed prefix.
  std::uint64_t valid_bytes = 0;
};

// Reads records until the first malformed one. Records must also carry
// consecutive seq values starting at 1.
LogReadResult read_event_log(const std::filesystem::path& path, const WorkspaceId& workspace);

enum class SyncMode {
  fsync,  // fdatasync before acknowledging
  flush,  // write(2) only; survives process death, not power loss
};

class LogWriter {
 public:
  virtual ~LogWriter() = default;
  // All-or-nothing: on failure the log is left exactly as before and
  // Error(storage_failure) is thrown.
  virtual void append(std::string_view record) = 0;
};

class FileLogWriter final : public LogWriter {
 public:
  using RawWrite = std::function<ssize_t(int fd, const void* data, std::size_t size)>;

  // raw_write replaces ::write, for fault injection.
  FileLogWriter(const std::filesystem::path& path, SyncMode sync, RawWrite raw_write = {});
  ~FileLogWriter() override;

  FileLogWriter(const FileLogWriter&) = delete;
  FileLogWriter& operator=(const FileLogWriter&) = delete;

  void append(std::string_view record) override;

 private:
  std::filesystem::path path_;
  SyncMode sync_;
  RawWrite raw_write_;
  int fd_ = -1;
  off_t size_ = 0;
  // Set when a failed append could not be rolled back.
  bool poisoned_ = false;
};

using LogWriterFactory = std::function<std::unique_ptr<LogWriter>(const std::filesystem::path& path, SyncMode sync)>;

LogWriterFactory default_log_writer_factory();

}  // namespace meco::repository
