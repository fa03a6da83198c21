#pragma once

#include <cstddef>

#include "metal/http.hpp"
#include "metal/store.hpp"

namespace metal {

inline constexpr std::size_t kMaxBatch = 500;

/// Wire layer over the statement store: PUT/POST/GET /xapi/statements.
class XapiService {
 public:
  explicit XapiService(Store& store) : store_(store) {}

  /// PUT ?statementId= with one statement (204), or POST with one statement
  /// or an array of at most 500 (200, ids in input order). Batches are
  /// all-or-nothing; errors name `index` and `field`.
  http::Response write(const http::Request& req);
  /// statementId is exclusive with the other filters. `more` carries the
  /// continuation cursor.
  http::Response read(const http::Request& req);

  /// Query parameters to a filter; throws Error(BadFilter).
  static StatementFilter parse_filter(const http::Request& req);

 private:
  Store& store_;
};

}  // namespace metal
