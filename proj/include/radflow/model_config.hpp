#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json.hpp>

namespace radflow {

enum class Variant { attention, graphsage, meanpool };

// Which per-block outputs (summed over blocks) form a node's embedding.
enum class EmbeddingSource { u, h, p, q, h_p, h_p_q };

std::string to_string(Variant v);
std::string to_string(EmbeddingSource s);
Variant parse_variant(const std::string& text);
EmbeddingSource parse_embedding_source(const std::string& text);

struct ModelConfig {
	std::size_t backcast = 112;
	std::size_t horizon = 28;
	std::size_t dim = 1;
	std::size_t hidden = 128;
	std::size_t layers = 8;
	double dropout = 0.1;
	std::size_t heads = 4;
	std::size_t hops = 0;
	Variant variant = Variant::attention;
	EmbeddingSource embedding_source = EmbeddingSource::u;
	bool final_projection = true;
	// Learnable null key/value slot letting a node attend to no neighbour.
	bool null_slot = true;

	// Throws ConfigError.
	void validate() const;
	std::size_t embedding_dim() const;
	std::size_t head_dim() const { return hidden / heads; }
	// Ego and aggregate are added without the W_E / W_N projections.
	bool direct_combine() const { return variant == Variant::meanpool || !final_projection; }

	bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

} // namespace radflow
