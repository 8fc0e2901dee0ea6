"""Minimal stand-in for the HiGHS command-line binary, driven through highspy."""
import sys

import highspy

args = dict(zip(sys.argv[1::2], sys.argv[2::2]))
h = highspy.Highs()
h.setOptionValue("output_flag", False)
h.readOptions(args["--options_file"])
h.setOptionValue("time_limit", float(args["--time_limit"]))
h.readModel(args["--model_file"])
h.run()
h.writeSolution(args["--solution_file"], 0)
