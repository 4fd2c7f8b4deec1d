#pragma once

// JSON encodings for the core types. Keys are emitted in nlohmann's default
// (sorted) order so repeated serialization of the same value is byte-identical.

#include <json.hpp>

#include "shiftwise/core.hpp"

namespace shiftwise {

using json = nlohmann::json;

void to_json(json& j, const Date& d);
void from_json(const json& j, Date& d);

void to_json(json& j, const HourStamp& h);
void from_json(const json& j, HourStamp& h);

void to_json(json& j, const DeviceSpec& s);
void from_json(const json& j, DeviceSpec& s);

void to_json(json& j, const HourlyLoadSeries& s);
void from_json(const json& j, HourlyLoadSeries& s);

void to_json(json& j, const ActivityMatrix& m);
void from_json(const json& j, ActivityMatrix& m);

void to_json(json& j, const DailyUsageTargets& t);
void from_json(const json& j, DailyUsageTargets& t);

void to_json(json& j, const UsageRun& r);
void from_json(const json& j, UsageRun& r);

void to_json(json& j, const TypicalLoadProfile& p);
void from_json(const json& j, TypicalLoadProfile& p);

void to_json(json& j, const PriceCurve& c);
void from_json(const json& j, PriceCurve& c);

void to_json(json& j, const Thresholds& t);
void from_json(const json& j, Thresholds& t);

void to_json(json& j, const Recommendation& r);
void from_json(const json& j, Recommendation& r);

}  // namespace shiftwise
