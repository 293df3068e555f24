#pragma once

#include "affinity.hpp"
#include "audio.hpp"
#include "clustering.hpp"
#include "diarization.hpp"
#include "embeddings.hpp"
#include "error.hpp"
#include "features.hpp"
#include "hungarian.hpp"
#include "linalg.hpp"
#include "pipeline.hpp"
#include "reseg.hpp"
#include "rng.hpp"
#include "rttm.hpp"
#include "sad.hpp"
#include "scoring.hpp"
#include "segmenter.hpp"
#include "synth.hpp"
#include "timeline.hpp"
