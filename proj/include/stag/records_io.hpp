#pragma once

// Line-delimited JSON records: queries, ground truth, submissions, captions.
//
// Boxes inside records are encoded as [frame, left, top, width, height].

#include "stag/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace stag {

std::vector<Query> parse_queries(std::istream& in);
std::vector<Query> parse_queries(const std::string& text);
std::string write_queries(const std::vector<Query>& queries);

std::vector<GroundTruthEntry> parse_ground_truth(std::istream& in);
std::vector<GroundTruthEntry> parse_ground_truth(const std::string& text);
std::string write_ground_truth(const std::vector<GroundTruthEntry>& entries);

Submission parse_submission(std::istream& in);
Submission parse_submission(const std::string& text);
std::string write_submission(const Submission& submission);

std::vector<CaptionRecord> parse_captions(std::istream& in);
std::vector<CaptionRecord> parse_captions(const std::string& text);
std::string write_captions(const std::vector<CaptionRecord>& captions);

}  // namespace stag
