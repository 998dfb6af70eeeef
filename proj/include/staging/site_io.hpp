#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "staging/site.hpp"

namespace staging {

struct LoadOptions {
  // Maximum nesting after id/refid expansion.
  std::size_t depth_cap = 32;
};

namespace detail {

struct RawNode {
  std::optional<std::string> label;
  std::optional<std::string> page;
  std::optional<std::string> stager;
  std::optional<std::string> id;
  std::optional<std::string> refid;
  std::vector<RawNode> children;
};

inline RawNode raw_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SiteError(SiteError::Kind::Malformed, "node must be a JSON object");
  RawNode n;
  auto opt_str = [&](const char* key) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string())
      throw SiteError(SiteError::Kind::Malformed, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
  };
  n.label = opt_str("label");
  n.page = opt_str("page");
  n.stager = opt_str("stager");
  n.id = opt_str("id");
  n.refid = opt_str("refid");
  if (auto it = j.find("children"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw SiteError(SiteError::Kind::Malformed, "'children' must be an array");
    for (const auto& c : *it) n.children.push_back(raw_from_json(c));
  }
  return n;
}

inline RawNode raw_from_ptree(const boost::property_tree::ptree& pt) {
  RawNode n;
  if (auto attrs = pt.get_child_optional("<xmlattr>")) {
    auto attr = [&](const char* key) -> std::optional<std::string> {
      if (auto v = attrs->get_optional<std::string>(key)) return *v;
      return std::nullopt;
    };
    n.label = attr("label");
    n.page = attr("page");
    n.stager = attr("stager");
    n.id = attr("id");
    n.refid = attr("refid");
  }
  for (const auto& [tag, child] : pt) {
    if (tag == "node") {
      n.children.push_back(raw_from_ptree(child));
    } else if (tag != "<xmlattr>" && tag != "<xmlcomment>") {
      throw SiteError(SiteError::Kind::Malformed, "unexpected element <" + tag + ">");
    }
  }
  return n;
}

class RefExpander {
public:
  RefExpander(const RawNode& root, std::size_t cap) : cap_(cap) { index(root); }

  SiteNode expand(const RawNode& raw, std::size_t depth) {
    if (depth > cap_)
      throw SiteError(SiteError::Kind::DepthCap,
                      "site nesting exceeds depth cap of " + std::to_string(cap_));
    SiteNode out;
    const RawNode* body = &raw;
    std::vector<std::string> pushed;
    if (raw.id) pushed.push_back(*raw.id);
    if (raw.refid) {
      if (!raw.children.empty() || raw.page)
        throw SiteError(SiteError::Kind::Malformed,
                        "node with refid '" + *raw.refid + "' must not have its own content");
      auto it = ids_.find(*raw.refid);
      if (it == ids_.end())
        throw SiteError(SiteError::Kind::Malformed, "unknown refid '" + *raw.refid + "'");
      if (std::find(stack_.begin(), stack_.end(), *raw.refid) != stack_.end())
        throw SiteError(SiteError::Kind::Cycle, "id/refid cycle through '" + *raw.refid + "'");
      body = it->second;
      if (body->refid) return expand_alias(raw, *body, depth);
      pushed.push_back(*raw.refid);
    }
    for (const auto& p : pushed) stack_.push_back(p);

    const auto& label = raw.label ? raw.label : body->label;
    if (label) {
      out.label = Token(*label);
    } else if (depth > 0) {
      throw SiteError(SiteError::Kind::Malformed, "node without a label");
    }
    out.page = body->page;
    const auto& stager = raw.stager ? raw.stager : body->stager;
    if (stager) {
      auto s = stager_from_string(*stager);
      if (!s) throw SiteError(SiteError::Kind::Malformed, "unknown stager '" + *stager + "'");
      out.stager = s;
    }
    for (const auto& c : body->children) out.children.push_back(expand(c, depth + 1));

    for (std::size_t i = 0; i < pushed.size(); ++i) stack_.pop_back();
    return out;
  }

private:
  // refid pointing at another refid node: follow the chain, keeping our label.
  SiteNode expand_alias(const RawNode& raw, const RawNode& target, std::size_t depth) {
    RawNode merged = target;
    if (raw.label) merged.label = raw.label;
    if (raw.stager) merged.stager = raw.stager;
    merged.id = raw.id;
    if (std::find(stack_.begin(), stack_.end(), *raw.refid) != stack_.end())
      throw SiteError(SiteError::Kind::Cycle, "id/refid cycle through '" + *raw.refid + "'");
    stack_.push_back(*raw.refid);
    SiteNode out = expand(merged, depth);
    stack_.pop_back();
    return out;
  }

  void index(const RawNode& n) {
    if (n.id && !ids_.emplace(*n.id, &n).second)
      throw SiteError(SiteError::Kind::Malformed, "duplicate id '" + *n.id + "'");
    for (const auto& c : n.children) index(c);
  }

  std::size_t cap_;
  std::map<std::string, const RawNode*> ids_;
  std::vector<std::string> stack_;
};

inline SiteTree build_tree(std::string name, const RawNode& root, const LoadOptions& opts) {
  RawNode r = root;
  if (!r.label && !name.empty()) r.label = name;
  RefExpander ex(r, opts.depth_cap);
  try {
    return SiteTree(std::move(name), ex.expand(r, 0));
  } catch (const std::invalid_argument& e) {
    throw SiteError(SiteError::Kind::Malformed, e.what());
  }
}

inline SiteTree load_json(std::string_view doc, const LoadOptions& opts) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(doc);
  } catch (const nlohmann::json::parse_error& e) {
    throw SiteError(SiteError::Kind::Malformed, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("node"))
    throw SiteError(SiteError::Kind::Malformed, "site document needs a 'node' member");
  std::string name;
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) throw SiteError(SiteError::Kind::Malformed, "'name' must be a string");
    name = it->get<std::string>();
  }
  return build_tree(std::move(name), raw_from_json(j["node"]), opts);
}

inline SiteTree load_xml(std::string_view doc, const LoadOptions& opts) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(doc)};
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw SiteError(SiteError::Kind::Malformed, std::string("invalid XML: ") + e.what());
  }
  auto site = tree.get_child_optional("site");
  std::size_t elements = 0;
  for (const auto& [tag, child] : tree)
    if (tag != "<xmlcomment>") ++elements;
  if (!site || elements != 1)
    throw SiteError(SiteError::Kind::Malformed, "document root must be a single <site> element");
  std::string name = site->get<std::string>("<xmlattr>.name", "");
  const pt::ptree* root_node = nullptr;
  for (const auto& [tag, child] : *site) {
    if (tag == "node") {
      if (root_node)
        throw SiteError(SiteError::Kind::Malformed, "<site> must contain exactly one root <node>");
      root_node = &child;
    } else if (tag != "<xmlattr>" && tag != "<xmlcomment>") {
      throw SiteError(SiteError::Kind::Malformed, "unexpected element <" + tag + ">");
    }
  }
  if (!root_node) throw SiteError(SiteError::Kind::Malformed, "<site> has no root <node>");
  return build_tree(std::move(name), raw_from_ptree(*root_node), opts);
}

}  // namespace detail

/// Loads a site description, auto-detecting XML (`<site ...>`) or JSON.
inline SiteTree load_site(std::string_view document, const LoadOptions& opts = {}) {
  std::size_t i = 0;
  while (i < document.size() && std::isspace(static_cast<unsigned char>(document[i]))) ++i;
  if (i == document.size()) throw SiteError(SiteError::Kind::Malformed, "empty site document");
  if (document[i] == '<') return detail::load_xml(document, opts);
  return detail::load_json(document, opts);
}

inline SiteTree load_site_file(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SiteError(SiteError::Kind::Malformed, "cannot open site file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_site(ss.str(), opts);
}

inline nlohmann::json site_node_to_json(const SiteNode& n) {
  nlohmann::json j = nlohmann::json::object();
  if (n.label) j["label"] = n.label->text();
  if (n.page) j["page"] = *n.page;
  if (n.stager) j["stager"] = std::string(to_string(*n.stager));
  if (!n.children.empty()) {
    j["children"] = nlohmann::json::array();
    for (const auto& c : n.children) j["children"].push_back(site_node_to_json(c));
  }
  return j;
}

/// JSON encoding of a (possibly pruned) tree. Consumed leaves have no label,
/// so the output only re-loads when the tree is pristine.
inline nlohmann::json site_to_json(const SiteTree& t) {
  return {{"name", t.name()}, {"node", site_node_to_json(t.root())}};
}

}  // namespace staging
