#pragma once

#include <aegan/association.hpp>
#include <aegan/csv.hpp>
#include <aegan/encoding.hpp>
#include <aegan/error.hpp>
#include <aegan/evaluation.hpp>
#include <aegan/gmm.hpp>
#include <aegan/losses.hpp>
#include <aegan/nn.hpp>
#include <aegan/schema.hpp>
#include <aegan/sorting.hpp>
#include <aegan/split.hpp>
#include <aegan/synthesis.hpp>
