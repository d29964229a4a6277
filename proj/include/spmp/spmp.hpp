#pragma once

#include <spmp/analysis.hpp>
#include <spmp/dictionary.hpp>
#include <spmp/hbw.hpp>
#include <spmp/pursuit.hpp>
#include <spmp/report.hpp>
#include <spmp/synth.hpp>
#include <spmp/transforms.hpp>
#include <spmp/types.hpp>
#include <spmp/wav.hpp>
