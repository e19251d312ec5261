import os
import sys
import shlex
import argparse
import subprocess

def main(argv):
    #ARGUMENTS:------------------------------------------------------------------------------------
    parser = argparse.ArgumentParser(description='Runs or submits the skgpool benchmark grid')
    #Script Parameters
    parser.add_argument('--d', dest='datafolder', help='directory holding the TUDataset folders (REQUIRED)', type=str, default='myData')
    parser.add_argument('--w', dest='writepath', help='root directory for outputs, scratch and logs', type=str, default='myWritePath')
    parser.add_argument('--ds', dest='datasets', help='comma separated dataset names', type=str, default='MUTAG,PTC_MR,PROTEINS')
    parser.add_argument('--x', dest='experiments', help='comma separated subset of methods,metrics,activations', type=str, default='methods,metrics,activations')
    parser.add_argument('--rc', dest='run_cluster', help='LOCAL, SLURM or LSF', type=str, default='LOCAL')
    parser.add_argument('--rm', dest='reserved_memory', help='reserved memory for job (GB)', type=int, default=4)
    parser.add_argument('--q', dest='queue', help='cluster queue name', type=str, default='normal')
    #skgpool Parameters
    parser.add_argument('--e', dest='epochs', help='training epochs', type=int, default=200)
    parser.add_argument('--f', dest='folds', help='cross-validation folds', type=int, default=10)
    parser.add_argument('--r', dest='repeats', help='cross-validation repetitions', type=int, default=10)
    parser.add_argument('--s', dest='seed', help='random seed shared by every job', type=int, default=0)
    parser.add_argument('--j', dest='jobs', help='parallel runs inside one job', type=int, default=1)

    options = parser.parse_args(argv[1:])

    #Folder Management------------------------------
    outputPath = os.path.join(options.writepath, 'output')
    scratchPath = os.path.join(options.writepath, 'scratch')
    logPath = os.path.join(options.writepath, 'logs')
    for path in (options.writepath, outputPath, scratchPath, logPath):
        os.makedirs(path, exist_ok=True)

    experiments = options.experiments.split(',')
    shared = ['--root', options.datafolder, '--epochs', str(options.epochs), '--folds', str(options.folds),
              '--repeats', str(options.repeats), '--seed', str(options.seed), '--jobs', str(options.jobs)]

    jobCount = 0
    for dataset in options.datasets.split(','):
        for job_name, command in benchmark_grid(dataset, experiments, outputPath):
            command = ['skgpool'] + command + ['--dataset', dataset] + shared
            if options.run_cluster == 'LOCAL':
                subprocess.run(command, check=True)
            elif options.run_cluster == 'SLURM':
                submit_slurm_cluster_job(scratchPath, logPath, job_name, command, options.reserved_memory, options.queue)
            elif options.run_cluster == 'LSF':
                submit_lsf_cluster_job(scratchPath, logPath, job_name, command, options.reserved_memory, options.queue)
            else:
                print('ERROR: Cluster type not found')
                return 1
            jobCount += 1
    print(str(jobCount)+' jobs run or submitted successfully')
    return 0


def benchmark_grid(dataset, experiments, outputPath):
    """(job name, CLI arguments) for every comparison requested on one dataset."""
    grid = []
    if 'methods' in experiments:
        for method in ('sort', 'geometric', 'mixed'):
            out = os.path.join(outputPath, dataset, 'method_'+method)
            grid.append(('GPOOL_'+dataset+'_'+method, ['crossval', '--method', method, '--label', method, '--out', out]))
    if 'metrics' in experiments:
        out = os.path.join(outputPath, dataset, 'metric_ablation')
        grid.append(('GPOOL_'+dataset+'_metrics', ['ablate-metric', '--metrics', 'euclidean,inner_product,cosine', '--out', out]))
    if 'activations' in experiments:
        for activation in ('tanh', 'relu'):
            out = os.path.join(outputPath, dataset, 'activation_'+activation)
            grid.append(('GPOOL_'+dataset+'_'+activation, ['crossval', '--activation', activation, '--label', activation, '--out', out]))
    return grid


def submit_slurm_cluster_job(scratchPath, logPath, job_name, command, reserved_memory, queue):
    job_path = os.path.join(scratchPath, job_name+'_run.sh')
    with open(job_path, 'w') as sh_file:
        sh_file.write('#!/bin/bash\n')
        sh_file.write('#SBATCH -p ' + queue + '\n')
        sh_file.write('#SBATCH --job-name=' + job_name + '\n')
        sh_file.write('#SBATCH --mem=' + str(reserved_memory) + 'G' + '\n')
        sh_file.write('#SBATCH -o ' + logPath+'/'+job_name + '.o\n')
        sh_file.write('#SBATCH -e ' + logPath+'/'+job_name + '.e\n')
        sh_file.write('srun ' + shlex.join(command) + '\n')
    subprocess.run(['sbatch', job_path], check=True)


def submit_lsf_cluster_job(scratchPath, logPath, job_name, command, reserved_memory, queue):
    job_path = os.path.join(scratchPath, job_name+'_run.sh')
    with open(job_path, 'w') as sh_file:
        sh_file.write('#!/bin/bash\n')
        sh_file.write('#BSUB -q ' + queue + '\n')
        sh_file.write('#BSUB -J ' + job_name + '\n')
        sh_file.write('#BSUB -R "rusage[mem=' + str(reserved_memory) + 'G]"' + '\n')
        sh_file.write('#BSUB -M ' + str(reserved_memory) + 'GB' + '\n')
        sh_file.write('#BSUB -o ' + logPath+'/'+job_name + '.o\n')
        sh_file.write('#BSUB -e ' + logPath+'/'+job_name + '.e\n')
        sh_file.write(shlex.join(command) + '\n')
    with open(job_path) as fh:
        subprocess.run(['bsub'], stdin=fh, check=True)


if __name__=="__main__":
    sys.exit(main(sys.argv))
