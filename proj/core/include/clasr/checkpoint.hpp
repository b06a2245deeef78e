#ifndef CLASR_CHECKPOINT_HPP
#define CLASR_CHECKPOINT_HPP

#include <filesystem>
#include <string>

#include "clasr/continual.hpp"
#include "clasr/params.hpp"
#include "clasr/synth.hpp"

namespace clasr {

/// Parameter checkpoint: magic header + version byte, then ordered
/// (name, shape, little-endian 64-bit floats) records. Round-trips are
/// bit-exact.
void save_params(const ParamMap& params, const std::filesystem::path& path);
ParamMap load_params(const std::filesystem::path& path);

/// Strategy-state checkpoint: same record format, with a method tag and
/// sections for theta*, the importance map and the frozen LwF teacher.
/// The model config is needed on load to rebuild the teacher.
void save_cl_state(const CLState& state, const std::filesystem::path& path);
CLState load_cl_state(const std::filesystem::path& path, const ModelConfig& config);

/// Dataset dump: one line-delimited JSON record per utterance with
/// base64-coded raw feature bytes; exact round-trip.
void save_task_dataset(const TaskDataset& dataset, const std::filesystem::path& path);
TaskDataset load_task_dataset(const std::filesystem::path& path);

std::string base64_encode(std::span<const unsigned char> bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

}  // namespace clasr

#endif  // CLASR_CHECKPOINT_HPP
