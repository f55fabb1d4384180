#include "meco/repository/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "meco/core/error.hpp"
#include "meco/knowledge/codec.hpp"

namespace meco::repository {

using nlohmann::json;
using namespace meco::knowledge;

namespace {

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

[[noreturn]] void corrupt(const std::string& why) { throw Error(ErrorCode::corrupt_log, why); }

}  // namespace

std::string encode_event_line(const ActivityEvent& event) {
  std::string line;
  line.reserve(256);
  line += "{\"seq\":";
  line += std::to_string(event.seq);
  line += ",\"timestamp\":\"";
  line += format_timestamp(event.timestamp);
  line += "\",\"actor\":";
  line += dump(json(event.actor.str()));
  line += ",\"kind\":\"";
  line += to_string(event.kind());
  line += "\",\"process\":\"";
  line += to_string(event.process());
  line += "\",\"payload\":";
  line += dump(payload_to_json(event.payload));
  line += "}\n";
  return line;
}

ActivityEvent decode_event_line(std::string_view line, const WorkspaceId& workspace) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    corrupt("record is not a JSON object");
  }
  try {
    ActivityEvent event;
    event.workspace = workspace;
    event.seq = j.at("seq").get<Seq>();
    event.timestamp = j.at("timestamp").get<Timestamp>();
    event.actor = j.at("actor").get<UserId>();
    auto kind_name = j.at("kind").get<std::string>();
    auto kind = parse_activity_kind(kind_name);
    if (!kind) {
      corrupt("unknown kind " + kind_name);
    }
    auto process_name = j.at("process").get<std::string>();
    if (process_name != to_string(classify_activity(*kind))) {
      corrupt("process " + process_name + " contradicts kind " + kind_name);
    }
    event.payload = payload_from_json(*kind, j.at("payload"));
    return event;
  } catch (const json::exception& e) {
    corrupt(std::string("malformed record: ") + e.what());
  }
}

LogReadResult read_event_log(const std::filesystem::path& path, const WorkspaceId& workspace) {
  LogReadResult result;
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) {
      return result;
    }
    result.corruption = CorruptRecord{0, 0, "cannot open " + path.string()};
    return result;
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::uint64_t offset = 0;
  std::uint64_t line_no = 0;
  while (offset < content.size()) {
    ++line_no;
    auto end = content.find('\n', offset);
    if (end == std::string::npos) {
      result.corruption = CorruptRecord{offset, line_no, "truncated record (no line terminator)"};
      return result;
    }
    std::string_view line(content.data() + offset, end - offset);
    try {
      auto event = decode_event_line(line, workspace);
      if (event.seq != result.events.size() + 1) {
        corrupt("expected seq " + std::to_string(result.events.size() + 1) + ", found " + std::to_string(event.seq));
      }
      result.events.push_back(std::move(event));
    } catch (const Error& e) {
      result.corruption = CorruptRecord{offset, line_no, e.what()};
      return result;
    }
    offset = end + 1;
    result.valid_bytes = offset;
  }
  return result;
}

FileLogWriter::FileLogWriter(const std::filesystem::path& path, SyncMode sync, RawWrite raw_write)
    : path_(path), sync_(sync), raw_write_(std::move(raw_write)) {
  if (!raw_write_) {
    raw_write_ = [](int fd, const void* data, std::size_t size) { return ::write(fd, data, size); };
  }
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::storage_failure, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  size_ = ::lseek(fd_, 0, SEEK_END);
  if (size_ < 0) {
    int err = errno;
    ::close(fd_);
    throw Error(ErrorCode::storage_failure, "cannot seek " + path.string() + ": " + std::strerror(err));
  }
}

FileLogWriter::~FileLogWriter() {
  if (fd_ >= 0) {
    ::close(fd_);
  }
}

void FileLogWriter::append(std::string_view record) {
  if (poisoned_) {
    throw Error(ErrorCode::storage_failure, "log " + path_.string() + " is unusable after a failed rollback");
  }
  std::size_t written = 0;
  std::string failure;
  while (written < record.size()) {
    ssize_t n = raw_write_(fd_, record.data() + written, record.size() - written);
    if (n < 0) {
      if (errno == EINTR) {
        continue;
      }
      failure = std::strerror(errno);
      break;
    }
    if (n == 0) {
      failure = "write made no progress";
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  if (failure.empty() && sync_ == SyncMode::fsync && ::fdatasync(fd_) != 0) {
    failure = std::string("fdatasync: ") + std::strerror(errno);
  }
  if (!failure.empty()) {
    if (::ftruncate(fd_, size_) != 0) {
      poisoned_ = true;
    }
    throw Error(ErrorCode::storage_failure, "append to " + path_.string() + " failed: " + failure);
  }
  size_ += static_cast<off_t>(record.size());
}

LogWriterFactory default_log_writer_factory() {
  return [](const std::filesystem::path& path, SyncMode sync) -> std::unique_ptr<LogWriter> {
    return std::make_unique<FileLogWriter>(path, sync);
  };
}

}  // namespace meco::repository
