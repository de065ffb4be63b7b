#include <cctype>
#include <map>
#include <sstream>

#include "usemetrics/ingest.hpp"
#include "usemetrics/rng.hpp"

namespace usemetrics {

namespace {

// Minimal strict XML subset: one root element, nested elements, double- or
// single-quoted attributes, character data, comments, numeric and named
// entities. Enough for the ContextObject interchange format and nothing more.

struct XmlNode {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::vector<XmlNode> children;
  std::string text;

  const XmlNode* child(const std::string& child_name) const {
    for (const XmlNode& c : children)
      if (c.name == child_name) return &c;
    return nullptr;
  }
};

class XmlParser {
 public:
  explicit XmlParser(const std::string& text) : s_(text) {}

  XmlNode parse_document() {
    skip_misc();
    XmlNode root = parse_element();
    skip_misc();
    if (pos_ != s_.size()) fail("content after document element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& reason) {
    throw Error(ErrorCode::XmlError,
                "line " + std::to_string(line_) + ": " + reason);
  }

  bool eof() const { return pos_ >= s_.size(); }

  char peek() const { return s_[pos_]; }

  char advance() {
    char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  bool consume(const std::string& lit) {
    if (s_.compare(pos_, lit.size(), lit) != 0) return false;
    for (std::size_t i = 0; i < lit.size(); ++i) advance();
    return true;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  // Whitespace, the XML declaration, processing instructions, comments.
  void skip_misc() {
    while (true) {
      skip_ws();
      if (consume("<!--")) {
        std::size_t end = s_.find("-->", pos_);
        if (end == std::string::npos) fail("unterminated comment");
        while (pos_ < end) advance();
        consume("-->");
        continue;
      }
      if (s_.compare(pos_, 2, "<?") == 0) {
        std::size_t end = s_.find("?>", pos_);
        if (end == std::string::npos) fail("unterminated processing instruction");
        while (pos_ < end) advance();
        consume("?>");
        continue;
      }
      break;
    }
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
           c == '_' || c == ':' || c == '.';
  }

  std::string parse_name() {
    std::string name;
    while (!eof() && name_char(peek())) name += advance();
    if (name.empty()) fail("expected a name");
    return name;
  }

  std::string decode_entities(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
      if (raw[i] != '&') {
        out += raw[i++];
        continue;
      }
      std::size_t semi = raw.find(';', i);
      if (semi == std::string::npos) fail("unterminated entity");
      std::string ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") {
        out += '&';
      } else if (ent == "lt") {
        out += '<';
      } else if (ent == "gt") {
        out += '>';
      } else if (ent == "quot") {
        out += '"';
      } else if (ent == "apos") {
        out += '\'';
      } else if (!ent.empty() && ent[0] == '#') {
        long code = 0;
        try {
          code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                     ? std::stol(ent.substr(2), nullptr, 16)
                     : std::stol(ent.substr(1));
        } catch (...) {
          fail("bad numeric entity: &" + ent + ";");
        }
        if (code < 1 || code > 127) fail("numeric entity outside ASCII");
        out += static_cast<char>(code);
      } else {
        fail("unknown entity: &" + ent + ";");
      }
      i = semi + 1;
    }
    return out;
  }

  XmlNode parse_element() {
    if (eof() || peek() != '<') fail("expected '<'");
    advance();
    XmlNode node;
    node.name = parse_name();
    while (true) {
      skip_ws();
      if (eof()) fail("unterminated start tag");
      if (consume("/>")) return node;
      if (peek() == '>') {
        advance();
        break;
      }
      std::string attr = parse_name();
      skip_ws();
      if (eof() || advance() != '=') fail("expected '=' after attribute name");
      skip_ws();
      if (eof()) fail("missing attribute value");
      char quote = advance();
      if (quote != '"' && quote != '\'') fail("attribute value must be quoted");
      std::string raw;
      while (!eof() && peek() != quote) raw += advance();
      if (eof()) fail("unterminated attribute value");
      advance();
      node.attrs[attr] = decode_entities(raw);
    }
    // Content: character data and child elements until the end tag.
    std::string raw_text;
    while (true) {
      if (eof()) fail("unterminated element <" + node.name + ">");
      if (peek() == '<') {
        if (consume("<!--")) {
          std::size_t end = s_.find("-->", pos_);
          if (end == std::string::npos) fail("unterminated comment");
          while (pos_ < end) advance();
          consume("-->");
          continue;
        }
        if (s_.compare(pos_, 2, "</") == 0) {
          consume("</");
          std::string closing = parse_name();
          if (closing != node.name)
            fail("mismatched end tag </" + closing + "> for <" + node.name +
                 ">");
          skip_ws();
          if (eof() || advance() != '>') fail("malformed end tag");
          node.text = decode_entities(raw_text);
          return node;
        }
        node.children.push_back(parse_element());
        continue;
      }
      raw_text += advance();
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

std::string xml_escape(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string entity_value(const XmlNode& object, const std::string& name) {
  const XmlNode* entity = object.child(name);
  if (entity == nullptr) return "";
  const XmlNode* id = entity->child("identifier");
  return id != nullptr ? id->text : entity->text;
}

void write_entity(std::ostream& out, const std::string& name,
                  const std::string& value) {
  if (value.empty()) {
    out << "    <" << name << "/>\n";
  } else {
    out << "    <" << name << "><identifier>" << xml_escape(value)
        << "</identifier></" << name << ">\n";
  }
}

}  // namespace

ContextObjectResult parse_context_objects(const std::string& document) {
  XmlParser parser(document);
  XmlNode root = parser.parse_document();

  std::vector<const XmlNode*> objects;
  if (root.name == "context-object") {
    objects.push_back(&root);
  } else if (root.name == "context-objects") {
    for (const XmlNode& child : root.children)
      if (child.name == "context-object") objects.push_back(&child);
  } else {
    throw Error(ErrorCode::XmlError,
                "line 1: unexpected root element <" + root.name + ">");
  }

  ContextObjectResult result;
  std::size_t index = 0;
  for (const XmlNode* object : objects) {
    ++index;
    ContextObjectEvent e;
    e.referent = entity_value(*object, "referent");
    if (e.referent.empty()) {
      result.warnings.push_back("MissingReferent: context-object " +
                                std::to_string(index) + " skipped");
      continue;
    }
    auto ts = object->attrs.find("timestamp");
    if (ts == object->attrs.end()) {
      result.warnings.push_back("context-object " + std::to_string(index) +
                                " skipped: missing administrative timestamp");
      continue;
    }
    auto uuid = object->attrs.find("identifier");
    if (uuid == object->attrs.end() || !is_uuid_text(uuid->second)) {
      result.warnings.push_back("context-object " + std::to_string(index) +
                                " skipped: missing or malformed identifier");
      continue;
    }
    try {
      e.timestamp = parse_iso8601(ts->second);
    } catch (const Error& err) {
      result.warnings.push_back("context-object " + std::to_string(index) +
                                " skipped: " + err.what());
      continue;
    }
    e.event_uuid = uuid->second;
    e.requester = entity_value(*object, "requester");
    e.service_type = entity_value(*object, "service-type");
    e.referring_entity = entity_value(*object, "referring-entity");
    e.resolver = entity_value(*object, "resolver");
    e.referrer = entity_value(*object, "referrer");
    result.events.push_back(std::move(e));
  }
  return result;
}

std::string write_context_objects(const std::vector<ContextObjectEvent>& events) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<context-objects>\n";
  for (const ContextObjectEvent& e : events) {
    out << "  <context-object timestamp=\"" << format_iso8601(e.timestamp)
        << "\" identifier=\"" << xml_escape(e.event_uuid) << "\">\n";
    write_entity(out, "referent", e.referent);
    write_entity(out, "referring-entity", e.referring_entity);
    write_entity(out, "requester", e.requester);
    write_entity(out, "service-type", e.service_type);
    write_entity(out, "resolver", e.resolver);
    write_entity(out, "referrer", e.referrer);
    out << "  </context-object>\n";
  }
  out << "</context-objects>\n";
  return out.str();
}

UsageEvent context_to_usage(const ContextObjectEvent& e) {
  UsageEvent u;
  u.event_id = e.event_uuid;
  u.user_id = e.requester;
  u.request_type = RequestType::from_token(e.service_type);
  u.resource_id = e.referent;
  u.timestamp = e.timestamp;
  return u;
}

}  // namespace usemetrics
