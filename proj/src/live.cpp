#include "spoofchain/live.hpp"

#include <netdb.h>
#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "spoofchain/header_model.hpp"
#include "spoofchain/text.hpp"

namespace spoofchain {

// ---- config

void check_target(const TargetConfig& t) {
  if (!t.consent_ack) {
    throw Error(ErrorCode::consent_required, "consent_ack is not set for " + t.smtp_key());
  }
  if (t.min_interval_seconds < 1) throw Error(ErrorCode::config, "min_interval_seconds must be at least 1");
  if (t.min_interval_seconds < 600 && !t.unsafe_lab_short_interval) {
    throw Error(ErrorCode::config,
                "min_interval_seconds below 600 needs unsafe_lab_short_interval = true (own lab servers only)");
  }
}

TargetConfig parse_target_config(std::string_view document) {
  auto kv = parse_key_values(document);
  TargetConfig t;
  ImapTarget imap;
  bool has_imap = false;
  std::optional<std::string> auth_user, auth_pass;
  auto port = [](const std::string& v) {
    char* end = nullptr;
    long p = std::strtol(v.c_str(), &end, 10);
    if (*end || p < 1 || p > 65535) throw Error(ErrorCode::config, "bad port: " + v);
    return static_cast<std::uint16_t>(p);
  };
  auto from_env = [](const std::string& var) {
    const char* v = std::getenv(var.c_str());
    if (!v) throw Error(ErrorCode::config, "environment variable " + var + " is not set");
    return std::string(v);
  };
  for (const auto& [key, value] : kv) {
    if (key == "smtp_host") t.smtp_host = value;
    else if (key == "smtp_port") t.smtp_port = port(value);
    else if (key == "use_starttls") t.use_starttls = parse_bool(value);
    else if (key == "tls_insecure") t.tls_insecure = parse_bool(value);
    else if (key == "auth_username") auth_user = value;
    else if (key == "auth_password") auth_pass = value;
    else if (key == "auth_password_env") auth_pass = from_env(value);
    else if (key == "imap_host") imap.host = value, has_imap = true;
    else if (key == "imap_port") imap.port = port(value);
    else if (key == "imap_tls") imap.use_tls = parse_bool(value);
    else if (key == "imap_username") imap.credentials.username = value;
    else if (key == "imap_password") imap.credentials.password = value;
    else if (key == "imap_password_env") imap.credentials.password = from_env(value);
    else if (key == "imap_mailbox") imap.mailbox = value;
    else if (key == "min_interval_seconds") {
      char* end = nullptr;
      long n = std::strtol(value.c_str(), &end, 10);
      if (*end || value.empty()) throw Error(ErrorCode::config, "bad min_interval_seconds: " + value);
      t.min_interval_seconds = static_cast<int>(n);
    } else if (key == "unsafe_lab_short_interval") t.unsafe_lab_short_interval = parse_bool(value);
    else if (key == "consent_ack") t.consent_ack = parse_bool(value);
    else throw Error(ErrorCode::config, "unknown target key: " + key);
  }
  if (t.smtp_host.empty()) throw Error(ErrorCode::config, "smtp_host is required");
  if (auth_user) t.auth = Credentials{*auth_user, auth_pass.value_or("")};
  if (has_imap) t.imap = imap;
  // Interval policy holds even before consent is given.
  auto probe = t;
  probe.consent_ack = true;
  check_target(probe);
  return t;
}

// ---- clock and limiter

void SystemClock::sleep_until(SystemTime t) { std::this_thread::sleep_until(t); }

std::optional<std::chrono::seconds> RateLimiter::try_acquire(const std::string& target,
                                                             std::chrono::seconds interval, SystemTime now) {
  std::lock_guard lock(mu_);
  auto it = last_.find(target);
  if (it != last_.end() && now < it->second + interval) {
    auto left = std::chrono::ceil<std::chrono::seconds>(it->second + interval - now);
    return left;
  }
  last_[target] = now;
  return std::nullopt;
}

std::optional<SystemTime> RateLimiter::last_send(const std::string& target) const {
  std::lock_guard lock(mu_);
  auto it = last_.find(target);
  if (it == last_.end()) return std::nullopt;
  return it->second;
}

RateLimiter& RateLimiter::process() {
  static RateLimiter limiter;
  return limiter;
}

// ---- transcripts

std::string iso8601(SystemTime t) {
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms % 1000));
  return buf;
}

std::optional<SystemTime> parse_iso8601(std::string_view s) {
  std::tm tm{};
  int ms = 0;
  std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                  &tm.tm_min, &tm.tm_sec, &ms) != 7) {
    return std::nullopt;
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  auto secs = timegm(&tm);
  return SystemTime{} + std::chrono::seconds(secs) + std::chrono::milliseconds(ms);
}

namespace {

std::string escape_line(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if (c == '\\') {
      out += "\\\\";
    } else if (c < 0x20 || c == 0x7F) {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02X", c);
      out += buf;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string unescape_line(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 >= s.size()) {
      out += s[i];
    } else if (s[i + 1] == '\\') {
      out += '\\';
      ++i;
    } else if (s[i + 1] == 'x' && i + 3 < s.size()) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 2, 2)), nullptr, 16));
      i += 3;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

std::string Transcript::to_text() const {
  std::string out = "# transcript protocol=" + protocol + " target=" + target + " case=" + case_id + "\n";
  for (const auto& e : entries) {
    out += iso8601(e.at);
    out += ' ';
    out += e.direction;
    out += ": ";
    out += escape_line(e.text);
    out += '\n';
  }
  return out;
}

Transcript Transcript::parse(std::string_view text) {
  Transcript t;
  for (const auto& line : text::split(text, '\n')) {
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      for (const auto& field : text::split(line.substr(1), ' ')) {
        auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        auto k = field.substr(0, eq);
        auto v = field.substr(eq + 1);
        if (k == "protocol") t.protocol = v;
        else if (k == "target") t.target = v;
        else if (k == "case") t.case_id = v;
      }
      continue;
    }
    auto sp = line.find(' ');
    if (sp == std::string::npos || line.size() < sp + 4 || line.compare(sp + 2, 2, ": ") != 0) {
      throw Error(ErrorCode::io, "malformed transcript line: " + line);
    }
    auto at = parse_iso8601(line.substr(0, sp));
    if (!at) throw Error(ErrorCode::io, "bad transcript timestamp: " + line.substr(0, sp));
    t.entries.push_back({*at, line[sp + 1], unescape_line(line.substr(sp + 4))});
  }
  return t;
}

std::string Transcript::client_bytes() const {
  std::string out;
  for (const auto& e : entries) {
    if (e.direction != 'C') continue;
    out += e.text;
    out += "\r\n";
  }
  return out;
}

std::optional<SystemTime> Transcript::first_at() const {
  if (entries.empty()) return std::nullopt;
  return entries.front().at;
}

// ---- TCP/TLS

namespace {

std::string ssl_error() {
  char buf[256];
  ERR_error_string_n(ERR_get_error(), buf, sizeof buf);
  return buf;
}

class TcpConnection final : public Connection {
 public:
  explicit TcpConnection(int fd) : fd_(fd) {}
  ~TcpConnection() override {
    if (ssl_) {
      SSL_shutdown(ssl_);
      SSL_free(ssl_);
    }
    if (ctx_) SSL_CTX_free(ctx_);
    ::close(fd_);
  }

  void write(std::string_view bytes) override {
    while (!bytes.empty()) {
      long n = ssl_ ? SSL_write(ssl_, bytes.data(), static_cast<int>(bytes.size()))
                    : ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
      if (n <= 0) throw Error(ErrorCode::connection_failed, "write failed");
      bytes.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  std::string read_line() override {
    for (;;) {
      auto pos = buf_.find("\r\n");
      if (pos != std::string::npos) {
        auto line = buf_.substr(0, pos);
        buf_.erase(0, pos + 2);
        return line;
      }
      char chunk[4096];
      long n = ssl_ ? SSL_read(ssl_, chunk, sizeof chunk) : ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) throw Error(ErrorCode::connection_failed, "connection closed or timed out");
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void start_tls(const std::string& host, bool verify) override {
    ctx_ = SSL_CTX_new(TLS_client_method());
    if (!ctx_) throw Error(ErrorCode::connection_failed, "TLS setup: " + ssl_error());
    if (verify) {
      SSL_CTX_set_verify(ctx_, SSL_VERIFY_PEER, nullptr);
      SSL_CTX_set_default_verify_paths(ctx_);
    }
    ssl_ = SSL_new(ctx_);
    SSL_set_fd(ssl_, fd_);
    SSL_set_tlsext_host_name(ssl_, host.c_str());
    if (verify) SSL_set1_host(ssl_, host.c_str());
    if (SSL_connect(ssl_) != 1) throw Error(ErrorCode::connection_failed, "TLS handshake: " + ssl_error());
    buf_.clear();
  }

 private:
  int fd_;
  SSL_CTX* ctx_ = nullptr;
  SSL* ssl_ = nullptr;
  std::string buf_;
};

}  // namespace

std::unique_ptr<Connection> TcpConnector::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  auto service = std::to_string(port);
  if (int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::connection_failed, host + ": " + gai_strerror(rc));
  }
  timeval tv{};
  tv.tv_sec = static_cast<long>(timeout_.count());
  int fd = -1;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) throw Error(ErrorCode::connection_failed, "cannot connect to " + host + ":" + service);
  return std::make_unique<TcpConnection>(fd);
}

// ---- sessions

namespace {

class Session {
 public:
  Session(Connection& conn, Clock& clock, Transcript& tr) : conn_(conn), clock_(clock), tr_(tr) {}

  void note(std::string text) { tr_.entries.push_back({clock_.now(), '*', std::move(text)}); }

  void send(std::string_view line, std::optional<std::string> logged = std::nullopt) {
    tr_.entries.push_back({clock_.now(), 'C', logged ? *logged : std::string(line)});
    std::string out(line);
    out += "\r\n";
    conn_.write(out);
  }

  std::string recv() {
    auto line = conn_.read_line();
    tr_.entries.push_back({clock_.now(), 'S', line});
    return line;
  }

  // Multi-line SMTP reply: code plus all text lines.
  std::pair<int, std::vector<std::string>> reply() {
    std::vector<std::string> lines;
    for (;;) {
      auto line = recv();
      lines.push_back(line);
      if (line.size() < 4 || line[3] != '-') break;
    }
    int code = 0;
    if (lines.back().size() >= 3) code = std::atoi(lines.back().substr(0, 3).c_str());
    return {code, lines};
  }

  std::vector<std::string> expect(const std::string& command, std::initializer_list<int> ok) {
    auto [code, lines] = reply();
    for (int c : ok) {
      if (c == code) return lines;
    }
    throw SmtpRejected(command, code, lines.back());
  }

 private:
  Connection& conn_;
  Clock& clock_;
  Transcript& tr_;
};

const RawMessage& pick(const AttackCase& c, std::size_t step) {
  if (step >= c.messages.size()) {
    throw Error(ErrorCode::precondition, "case " + c.name() + " has no message step " + std::to_string(step + 1));
  }
  return c.messages[step];
}

// Message bytes split into CRLF-terminated lines; the last line keeps no
// terminator when the input lacked one.
std::vector<std::string> wire_lines(const std::string& bytes) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (;;) {
    auto pos = bytes.find("\r\n", start);
    if (pos == std::string::npos) {
      if (start < bytes.size()) lines.push_back(bytes.substr(start));
      return lines;
    }
    lines.push_back(bytes.substr(start, pos - start));
    start = pos + 2;
  }
}

}  // namespace

void LiveTester::admit(const TargetConfig& target, const std::string& key) {
  check_target(target);
  if (auto left = limiter_.try_acquire(key, std::chrono::seconds(target.min_interval_seconds), clock_.now())) {
    throw RateLimited(*left);
  }
}

Transcript LiveTester::deliver_smtp(const AttackCase& c, const TargetConfig& target, std::size_t step) {
  check_target(target);
  const auto& msg = pick(c, step);
  admit(target, target.smtp_key());

  Transcript tr;
  tr.target = target.smtp_key();
  tr.case_id = c.name();
  tr.protocol = "smtp";
  tr.entries.push_back({clock_.now(), '*', "connect " + tr.target});
  auto conn = connector_.connect(target.smtp_host, target.smtp_port);
  Session s(*conn, clock_, tr);

  s.expect("CONNECT", {220});
  const std::string helo = msg.helo_domain.empty() ? "localhost" : msg.helo_domain;
  s.send("EHLO " + helo);
  auto caps = s.expect("EHLO", {250});
  bool starttls = std::any_of(caps.begin(), caps.end(), [](const std::string& l) {
    return l.size() > 4 && text::iequals(text::trim(l.substr(4)), "STARTTLS");
  });
  if (target.use_starttls && starttls) {
    s.send("STARTTLS");
    s.expect("STARTTLS", {220});
    conn->start_tls(target.smtp_host, !target.tls_insecure);
    s.note(target.tls_insecure ? "tls started, certificate not checked" : "tls started");
    s.send("EHLO " + helo);
    s.expect("EHLO", {250});
  } else if (target.use_starttls) {
    s.note("STARTTLS not offered, continuing in clear");
  }
  if (target.auth) {
    std::string plain;
    plain += '\0';
    plain += target.auth->username;
    plain += '\0';
    plain += target.auth->password;
    s.send("AUTH PLAIN " + text::base64_encode(plain), "AUTH PLAIN <redacted>");
    s.expect("AUTH", {235});
  }
  s.send("MAIL FROM:<" + msg.mail_from.value_or("") + ">");
  s.expect("MAIL", {250});
  for (const auto& rcpt : msg.rcpt_to) {
    s.send("RCPT TO:<" + rcpt + ">");
    s.expect("RCPT", {250, 251});
  }
  s.send("DATA");
  s.expect("DATA", {354});
  for (const auto& line : wire_lines(serialize_message(msg))) {
    s.send(!line.empty() && line.front() == '.' ? "." + line : line);
  }
  s.send(".");
  s.expect("DATA", {250});
  s.send("QUIT");
  try {
    s.reply();
  } catch (const Error&) {
    // a server that drops the line after QUIT has still taken the message
  }
  return tr;
}

Transcript LiveTester::imap_append(const AttackCase& c, const TargetConfig& target, std::size_t step) {
  check_target(target);
  if (!target.imap) throw Error(ErrorCode::precondition, "no IMAP settings in the target config");
  const auto& imap = *target.imap;
  const auto& msg = pick(c, step);
  const auto key = "imap:" + imap.host + ":" + std::to_string(imap.port);
  admit(target, key);

  Transcript tr;
  tr.target = key;
  tr.case_id = c.name();
  tr.protocol = "imap";
  tr.entries.push_back({clock_.now(), '*', "connect " + key});
  auto conn = connector_.connect(imap.host, imap.port);
  if (imap.use_tls) conn->start_tls(imap.host, !target.tls_insecure);
  Session s(*conn, clock_, tr);

  auto quote = [](const std::string& v) {
    std::string out = "\"";
    for (char ch : v) {
      if (ch == '"' || ch == '\\') out += '\\';
      out += ch;
    }
    return out + "\"";
  };
  // Reads to the tagged completion; returns it.
  auto tagged = [&](const std::string& tag) {
    for (;;) {
      auto line = s.recv();
      if (line.starts_with(tag + " ")) return line.substr(tag.size() + 1);
    }
  };

  auto greeting = s.recv();
  if (!greeting.starts_with("* OK")) throw Error(ErrorCode::connection_failed, "IMAP greeting: " + greeting);
  s.send("a1 LOGIN " + quote(imap.credentials.username) + " " + quote(imap.credentials.password),
         "a1 LOGIN " + quote(imap.credentials.username) + " <redacted>");
  if (auto r = tagged("a1"); !r.starts_with("OK")) throw Error(ErrorCode::append_rejected, "LOGIN: " + r);

  auto bytes = serialize_message(msg);
  s.send("a2 APPEND " + quote(imap.mailbox) + " {" + std::to_string(bytes.size()) + "}");
  for (;;) {
    auto line = s.recv();
    if (line.starts_with("+")) break;
    if (line.starts_with("a2 ")) throw Error(ErrorCode::append_rejected, line.substr(3));
  }
  auto lines = wire_lines(bytes);
  for (const auto& line : lines) s.send(line);
  s.send("");
  if (auto r = tagged("a2"); !r.starts_with("OK")) throw Error(ErrorCode::append_rejected, r);
  s.send("a3 LOGOUT");
  try {
    tagged("a3");
  } catch (const Error&) {
  }
  return tr;
}

std::vector<Transcript> LiveTester::deliver_repeated(const AttackCase& c, const TargetConfig& target, int repeats,
                                                     std::size_t step) {
  check_target(target);
  std::vector<Transcript> out;
  const auto interval = std::chrono::seconds(target.min_interval_seconds);
  for (int i = 0; i < repeats; ++i) {
    if (auto last = limiter_.last_send(target.smtp_key())) clock_.sleep_until(*last + interval);
    out.push_back(deliver_smtp(c, target, step));
  }
  return out;
}

}  // namespace spoofchain
