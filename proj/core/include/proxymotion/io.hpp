#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "proxymotion/types.hpp"

namespace proxymotion {

inline constexpr int kFormatVersion = 1;

// capture.jsonl: a header line, one line per frame, then one tracks line.
CaptureSession parse_capture(std::string_view content);
std::string serialize_capture(const CaptureSession& session);

// boxes.json
BoxMotionSequence parse_boxes(std::string_view content);
std::string serialize_boxes(const BoxMotionSequence& sequence);

// motion.json
SkeletonMotion parse_motion(std::string_view content);
std::string serialize_motion(const SkeletonMotion& motion);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace proxymotion
