#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spoofchain/config.hpp"
#include "spoofchain/corpus.hpp"
#include "spoofchain/error.hpp"

namespace spoofchain {

using SystemTime = std::chrono::system_clock::time_point;

struct Credentials {
  std::string username;
  std::string password;
};

struct ImapTarget {
  std::string host;
  std::uint16_t port = 993;
  bool use_tls = true;  // implicit TLS on connect
  Credentials credentials;
  std::string mailbox = "INBOX";
};

struct TargetConfig {
  std::string smtp_host;
  std::uint16_t smtp_port = 25;
  bool use_starttls = true;
  bool tls_insecure = false;  // skip certificate checks, lab servers only
  std::optional<Credentials> auth;
  std::optional<ImapTarget> imap;
  int min_interval_seconds = 600;
  // Required for any interval under 600 s; meant for one's own lab server.
  bool unsafe_lab_short_interval = false;
  bool consent_ack = false;

  std::string smtp_key() const { return smtp_host + ":" + std::to_string(smtp_port); }
};

// Keys: smtp_host, smtp_port, use_starttls, tls_insecure, auth_username,
// auth_password (or auth_password_env), imap_host, imap_port, imap_tls,
// imap_username, imap_password (or imap_password_env), imap_mailbox,
// min_interval_seconds, unsafe_lab_short_interval, consent_ack.
TargetConfig parse_target_config(std::string_view document);

// SMTP rejection: which command drew a non-success reply, and the reply.
class SmtpRejected : public Error {
 public:
  SmtpRejected(std::string command, int reply_code, const std::string& reply)
      : Error(ErrorCode::rejected, "rejected-at-" + command + "(" + std::to_string(reply_code) + "): " + reply),
        command_(std::move(command)),
        reply_code_(reply_code) {}

  const std::string& command() const noexcept { return command_; }
  int reply_code() const noexcept { return reply_code_; }

 private:
  std::string command_;
  int reply_code_;
};

class RateLimited : public Error {
 public:
  explicit RateLimited(std::chrono::seconds remaining)
      : Error(ErrorCode::rate_limited, "wait " + std::to_string(remaining.count()) + " s"), remaining_(remaining) {}
  std::chrono::seconds remaining() const noexcept { return remaining_; }

 private:
  std::chrono::seconds remaining_;
};

// ---- seams

class Connection {
 public:
  virtual ~Connection() = default;
  virtual void write(std::string_view bytes) = 0;
  // One line without its CRLF. Throws connection_failed on EOF.
  virtual std::string read_line() = 0;
  virtual void start_tls(const std::string& host, bool verify) = 0;
};

class Connector {
 public:
  virtual ~Connector() = default;
  // Throws connection_failed.
  virtual std::unique_ptr<Connection> connect(const std::string& host, std::uint16_t port) = 0;
};

// Plain TCP with OpenSSL for TLS.
class TcpConnector final : public Connector {
 public:
  explicit TcpConnector(std::chrono::seconds timeout = std::chrono::seconds(30)) : timeout_(timeout) {}
  std::unique_ptr<Connection> connect(const std::string& host, std::uint16_t port) override;

 private:
  std::chrono::seconds timeout_;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual SystemTime now() = 0;
  virtual void sleep_until(SystemTime t) = 0;
};

class SystemClock final : public Clock {
 public:
  SystemTime now() override { return std::chrono::system_clock::now(); }
  void sleep_until(SystemTime t) override;
};

// Last send per target; one shared instance guards the whole process.
class RateLimiter {
 public:
  // Records `now` and returns nullopt when the target is free, otherwise
  // the remaining wait.
  std::optional<std::chrono::seconds> try_acquire(const std::string& target, std::chrono::seconds interval,
                                                  SystemTime now);
  std::optional<SystemTime> last_send(const std::string& target) const;

  static RateLimiter& process();

 private:
  mutable std::mutex mu_;
  std::map<std::string, SystemTime> last_;
};

// ---- transcripts

struct TranscriptEntry {
  SystemTime at;
  char direction = 'C';  // C client, S server, '*' note
  std::string text;      // one line without CRLF, raw bytes
};

struct Transcript {
  std::string target;
  std::string case_id;
  std::string protocol;  // smtp or imap
  std::vector<TranscriptEntry> entries;

  // `<ISO-8601> <dir>: <escaped line>` per entry.
  std::string to_text() const;
  static Transcript parse(std::string_view text);
  // The byte stream the client wrote, rebuilt from C entries. Credentials
  // are redacted in the transcript, so an AUTH or LOGIN line replays as
  // logged.
  std::string client_bytes() const;
  std::optional<SystemTime> first_at() const;
};

std::string iso8601(SystemTime t);
std::optional<SystemTime> parse_iso8601(std::string_view s);

// ---- delivery

class LiveTester {
 public:
  LiveTester(Connector& connector, Clock& clock, RateLimiter& limiter = RateLimiter::process())
      : connector_(connector), clock_(clock), limiter_(limiter) {}

  // Sends messages[step] over SMTP. Checks consent and the rate limit
  // before opening any connection.
  Transcript deliver_smtp(const AttackCase& c, const TargetConfig& target, std::size_t step = 0);

  // Places messages[step] with IMAP APPEND, for rendering-only checks.
  Transcript imap_append(const AttackCase& c, const TargetConfig& target, std::size_t step = 0);

  // `repeats` SMTP deliveries, sleeping out the interval between them.
  std::vector<Transcript> deliver_repeated(const AttackCase& c, const TargetConfig& target, int repeats,
                                           std::size_t step = 0);

 private:
  void admit(const TargetConfig& target, const std::string& key);

  Connector& connector_;
  Clock& clock_;
  RateLimiter& limiter_;
};

// Validates consent and interval settings; throws consent_required or config.
void check_target(const TargetConfig& target);

}  // namespace spoofchain
