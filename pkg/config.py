# stokes-limits 数值实验配置文件

# 程序信息
PROGRAM_NAME = "stokes-limits"
PROGRAM_VERSION = "0.1.0"
PROGRAM_DESCRIPTION = "抛物芽与鞍结点向量场解析分类不变量的数值工具包"

# 数值配置
DEFAULT_TOL = 1e-10          # 通用收敛容差
FATOU_TOL = 1e-11            # Fatou 坐标极限的停止容差
ITERATION_CAP = 100_000      # 轨道迭代上限
NEWTON_MAX_STEPS = 50        # 牛顿法最大步数
NEWTON_TOL = 1e-14           # 牛顿法相对步长容差
NORMALIZATION_TOL = 1e-12    # t^{k+1} 系数必须等于 2πi 的容差
KOENIGS_STOP_TOL = 1e-24     # Koenigs 极限：射流尾项低于该容差（double 下不低于 1e-16）时停止
KOENIGS_JET_ORDER = 32       # Koenigs 线性化局部射流的阶数
KOENIGS_RESIDUAL_TOL = 1e-8  # 函数方程相对残差上限，超过则提升精度
PATH_POINTS = 48             # 对数分支延拓时每段路径的采样点数

# 傅里叶采样配置
FOURIER_RANGE = 3            # 提取 |l| <= FOURIER_RANGE 的系数
FOURIER_SAMPLES = 256        # 每个周期的采样点数
FOURIER_DEPTH = 2.0          # 采样线进入半平面的深度

# 几何配置
NONDEGENERACY_THRESHOLD = 0.05     # 非退化判据的角度阈值（弧度）
POLYGON_DEFECT_THRESHOLD = 1e-2    # 极限正多边形的最大偏差
ANGLE_EPS = 1e-12                  # 射线落在扇形边界上的判定容差
DEFAULT_DELTA = 0.3                # 评估圆盘 |t| < δ 的半径

# 积分配置
ODE_TOL = 1e-12              # RK45 相对容差
ODE_ATOL = 1e-14             # RK45 绝对容差
MIN_LOOP_STEPS = 64          # 单值化环路的最少接受步数
MONODROMY_DELTA = 0.25       # 横截面 z = δ 的默认高度
FIT_RESIDUAL_THRESHOLD = 1e-6  # 单值映射拟合残差上限
SEPARATRIX_SEED_OFFSET = 1e-6  # 分界线延拓的起始偏移（相对最近根距离）
SEPARATRIX_JET_ORDER = 40      # 分界线局部级数阶数
SEPARATRIX_JET_FRACTION = 0.25    # |t-α| 不超过该比例乘最近根距离时直接用局部级数
MONODROMY_GRID_RADIUS = 0.004   # 单值射流拟合所用圆周网格的半径
MONODROMY_GRID_POINTS = 32      # 圆周网格点数
MONODROMY_MAP_DEGREE = 40       # 单值映射族的多项式拟合次数
MONODROMY_MAP_RADIUS = 0.1      # 单值映射族拟合圆周的半径
MONODROMY_MAP_POINTS = 128      # 单值映射族拟合圆周的点数

# 精度配置
DEFAULT_PRECISION = "double"       # double | double-double
DOUBLE_DOUBLE_PREC = 106           # double-double 模式的二进制位数

# 日志配置
LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE = "logs/stokes_limits.log"

# 性能配置
MAX_CONCURRENT_TASKS = 4     # 最大并发任务数
THREADS_ENV_VAR = "STOKES_THREADS"  # 限制并行度的环境变量

# 输出配置
DEFAULT_OUTPUT_FORMAT = "json"     # json | csv
JSON_SIGNIFICANT_DIGITS = 17       # 浮点数输出的有效数字
CSV_DELIMITER = ","
MANIFEST_NAME = "manifest.json"

# 开发配置
DEBUG_MODE = False
