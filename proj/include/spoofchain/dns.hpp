#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spoofchain {

enum class RecordType { TXT, A, AAAA, MX };

std::string_view to_string(RecordType t);
RecordType parse_record_type(std::string_view s);

enum class DnsStatus { ok, nxdomain, error };

struct DnsAnswer {
  DnsStatus status = DnsStatus::nxdomain;
  std::vector<std::string> values;
};

class Resolver {
 public:
  virtual ~Resolver() = default;
  // Names are matched case-insensitively; a trailing dot is ignored.
  virtual DnsAnswer query(std::string_view name, RecordType type) const = 0;
};

// In-memory zone. Immutable once handed to a resolver consumer.
class DnsZone final : public Resolver {
 public:
  DnsZone() = default;

  // `<name> <TYPE> <value>` per line, '#' comments. TXT values may be split
  // into several quoted strings, which are concatenated. A name listed with
  // type SERVFAIL answers every query with a resolver error.
  static DnsZone parse(std::string_view text);

  void add(std::string_view name, RecordType type, std::string value);
  void add_failure(std::string_view name);

  DnsAnswer query(std::string_view name, RecordType type) const override;
  std::string to_text() const;

 private:
  std::map<std::pair<std::string, RecordType>, std::vector<std::string>> records_;
  std::set<std::string> names_;
  std::set<std::string> failing_;
};

// System resolver (res_nquery). Each query uses its own resolver state.
class LiveResolver final : public Resolver {
 public:
  DnsAnswer query(std::string_view name, RecordType type) const override;
};

std::string canonical_name(std::string_view name);

}  // namespace spoofchain
