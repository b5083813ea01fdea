from .local_search import SolveReport, SolverConfig, init_grouping, solve
from .loops import PathLabel, find_loop_bellman_ford, find_loop_greedy
from .baselines import baseline_gale_shapley, baseline_user_preference
from .oracle import brute_force_optimum, count_cycles, enumerate_cycles, is_all_stable
