#include "radflow/model_config.hpp"

#include "radflow/errors.hpp"

namespace radflow {

std::string to_string(Variant v) {
	switch (v) {
	case Variant::attention: return "attention";
	case Variant::graphsage: return "graphsage";
	case Variant::meanpool: return "meanpool";
	}
	return "?";
}

std::string to_string(EmbeddingSource s) {
	switch (s) {
	case EmbeddingSource::u: return "u";
	case EmbeddingSource::h: return "h";
	case EmbeddingSource::p: return "p";
	case EmbeddingSource::q: return "q";
	case EmbeddingSource::h_p: return "h+p";
	case EmbeddingSource::h_p_q: return "h+p+q";
	}
	return "?";
}

Variant parse_variant(const std::string& text) {
	if (text == "attention") return Variant::attention;
	if (text == "graphsage") return Variant::graphsage;
	if (text == "meanpool") return Variant::meanpool;
	throw ConfigError("unknown variant '" + text + "' (expected attention|graphsage|meanpool)");
}

EmbeddingSource parse_embedding_source(const std::string& text) {
	if (text == "u") return EmbeddingSource::u;
	if (text == "h") return EmbeddingSource::h;
	if (text == "p") return EmbeddingSource::p;
	if (text == "q") return EmbeddingSource::q;
	if (text == "h+p") return EmbeddingSource::h_p;
	if (text == "h+p+q") return EmbeddingSource::h_p_q;
	throw ConfigError("unknown embedding_source '" + text + "' (expected u|h|p|q|h+p|h+p+q)");
}

std::size_t ModelConfig::embedding_dim() const {
	switch (embedding_source) {
	case EmbeddingSource::h_p: return 2 * hidden;
	case EmbeddingSource::h_p_q: return 3 * hidden;
	default: return hidden;
	}
}

void ModelConfig::validate() const {
	if (backcast < 1) throw ConfigError("backcast must be >= 1");
	if (horizon < 1) throw ConfigError("horizon must be >= 1");
	if (dim < 1) throw ConfigError("dim must be >= 1");
	if (hidden < 1) throw ConfigError("hidden must be >= 1");
	if (layers < 1) throw ConfigError("layers must be >= 1");
	if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must lie in [0, 1)");
	if (hops > 2) throw ConfigError("hops must be 0, 1 or 2");
	if (hops > 0) {
		if (heads < 1 || hidden % heads != 0) throw ConfigError("hidden must be divisible by heads");
		if (direct_combine() && embedding_dim() != hidden) {
			throw ConfigError("direct ego combination needs an embedding of size hidden");
		}
		if (hops == 2 && embedding_dim() != hidden) {
			throw ConfigError("two-hop aggregation needs an embedding of size hidden");
		}
	}
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
	j = nlohmann::json{{"backcast", c.backcast},
	                   {"horizon", c.horizon},
	                   {"dim", c.dim},
	                   {"hidden", c.hidden},
	                   {"layers", c.layers},
	                   {"dropout", c.dropout},
	                   {"heads", c.heads},
	                   {"hops", c.hops},
	                   {"variant", to_string(c.variant)},
	                   {"embedding_source", to_string(c.embedding_source)},
	                   {"final_projection", c.final_projection},
	                   {"null_slot", c.null_slot}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
	c.backcast = j.at("backcast").get<std::size_t>();
	c.horizon = j.at("horizon").get<std::size_t>();
	c.dim = j.at("dim").get<std::size_t>();
	c.hidden = j.at("hidden").get<std::size_t>();
	c.layers = j.at("layers").get<std::size_t>();
	c.dropout = j.at("dropout").get<double>();
	c.heads = j.at("heads").get<std::size_t>();
	c.hops = j.at("hops").get<std::size_t>();
	c.variant = parse_variant(j.at("variant").get<std::string>());
	c.embedding_source = parse_embedding_source(j.at("embedding_source").get<std::string>());
	c.final_projection = j.at("final_projection").get<bool>();
	c.null_slot = j.at("null_slot").get<bool>();
}

} // namespace radflow
