#pragma once

#include <nlohmann/json.hpp>

#include "meco/knowledge/events.hpp"

// JSON forms of the domain records. Decoding is strict: missing or mistyped
// fields throw nlohmann::json::exception, which callers turn into their own
// error (corrupt log, bad request).

namespace nlohmann {

template <typename Tag>
struct adl_serializer<meco::StrongId<Tag>> {
  static void to_json(json& j, const meco::StrongId<Tag>& id) { j = id.str(); }
  static void from_json(const json& j, meco::StrongId<Tag>& id) { id = meco::StrongId<Tag>(j.get<std::string>()); }
};

template <>
struct adl_serializer<meco::Timestamp> {
  static void to_json(json& j, const meco::Timestamp& ts);
  static void from_json(const json& j, meco::Timestamp& ts);
};

}  // namespace nlohmann

namespace meco::knowledge {

void to_json(nlohmann::json& j, const Indicator& v);
void from_json(const nlohmann::json& j, Indicator& v);
void to_json(nlohmann::json& j, const InformationSource& v);
void from_json(const nlohmann::json& j, InformationSource& v);
void to_json(nlohmann::json& j, const ProblemDefinition& v);
void from_json(const nlohmann::json& j, ProblemDefinition& v);
void to_json(nlohmann::json& j, const EntityRef& v);
void from_json(const nlohmann::json& j, EntityRef& v);
void to_json(nlohmann::json& j, const AnnotationRecord& v);
void from_json(const nlohmann::json& j, AnnotationRecord& v);
void to_json(nlohmann::json& j, const DocumentRecord& v);
void from_json(const nlohmann::json& j, DocumentRecord& v);

nlohmann::json payload_to_json(const ActivityPayload& payload);
ActivityPayload payload_from_json(ActivityKind kind, const nlohmann::json& j);

// Event as carried on the wire and in history responses (includes workspace).
nlohmann::json event_to_json(const ActivityEvent& event);

}  // namespace meco::knowledge

namespace meco::indicator {

void to_json(nlohmann::json& j, const IndicatorReport& v);
void from_json(const nlohmann::json& j, IndicatorReport& v);

}  // namespace meco::indicator
