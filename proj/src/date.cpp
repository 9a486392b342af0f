#include "tcause/date.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "tcause/error.hpp"

namespace tcause {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::NotAligned: return "NotAligned";
    case ErrorCode::InvalidRank: return "InvalidRank";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::TargetNotInGraph: return "TargetNotInGraph";
    case ErrorCode::NoPathFound: return "NoPathFound";
    case ErrorCode::UnknownRelation: return "UnknownRelation";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::NoChainFound: return "NoChainFound";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidInput, "bad date: '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Day parse_date(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' ||
      (text.size() > 10 && text[10] != 'T' && text[10] != ' ')) {
    fail(ErrorCode::InvalidInput, "bad date: '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_int(text.substr(0, 4), text)},
                           month{static_cast<unsigned>(parse_int(text.substr(5, 2), text))},
                           day{static_cast<unsigned>(parse_int(text.substr(8, 2), text))}};
  if (!ymd.ok()) {
    fail(ErrorCode::InvalidInput, "invalid calendar date: '" + std::string(text) + "'");
  }
  return Day{static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
}

std::string format_date(Day d) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{d.value}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace tcause
